import os
import sys

import numpy as np
import pytest

# Add project root and this directory to path
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.dirname(__file__))

from chains import three_state_chain, eight_state_chain  # noqa: E402
from core.chain import validate_stochastic  # noqa: E402


@pytest.fixture
def three():
    """Three-state chain at a=0.3, b=0.2, c=0.5."""
    return validate_stochastic(three_state_chain(0.3, 0.2, 0.5))


@pytest.fixture
def eight():
    """Eight-state chain at a=1/5, b=1/4."""
    return validate_stochastic(eight_state_chain())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _write_matrix(path, matrix):
    path.write_text("\n".join(" ".join(repr(float(v)) for v in row) for row in matrix) + "\n")
    return str(path)


@pytest.fixture
def three_file(tmp_path):
    return _write_matrix(tmp_path / "three_state.mat", three_state_chain(0.3, 0.2, 0.5))


@pytest.fixture
def eight_file(tmp_path):
    return _write_matrix(tmp_path / "eight_state.mat", eight_state_chain())
