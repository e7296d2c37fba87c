"""
Trajectory-level diagnostics: sample paths and a likelihood-ratio test of
first- against second-order dependence on the lumped alphabet.

The test is evidence only. Whether a partition is a lumping is decided by
the exact row-sum check.
"""

from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import chi2

from core.chain import Partition, StochasticMatrix
from core.errors import DimensionMismatch, InsufficientData

RNG_NAME = "numpy.random.PCG64"
RNG_VERSION = 1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled path X_0..X_{T-1} (0-based states) and the seed that produced it."""

    states: np.ndarray
    seed: int
    rng: str = RNG_NAME

    def __len__(self) -> int:
        return int(self.states.shape[0])

    def one_based(self) -> np.ndarray:
        return self.states + 1


class QuotientTestResult(NamedTuple):
    statistic: float
    dof: int
    pvalue: float


def simulate(P: StochasticMatrix, x0: int, T: int, seed: int) -> Trajectory:
    """
    Sample T states starting at x0 by inverse-CDF on each row.

    Args:
        P: transition matrix
        x0: initial state (0-based)
        T: trajectory length including x0
        seed: PCG64 seed

    Returns:
        Trajectory
    """
    if T < 1:
        raise ValueError(f"trajectory length must be >= 1, got {T}")
    if not 0 <= x0 < P.n:
        raise ValueError(f"initial state {x0 + 1} outside 1..{P.n}")

    rng = np.random.Generator(np.random.PCG64(seed))
    cdf = np.cumsum(P.entries, axis=1)
    cdf[:, -1] = 1.0
    rows = [list(row) for row in cdf]
    last = P.n - 1

    draws = rng.random(T - 1).tolist()
    states = [x0]
    state = x0
    for u in draws:
        state = min(bisect_right(rows[state], u), last)
        states.append(state)
    return Trajectory(np.asarray(states, dtype=np.int64), seed)


def empirical_transition_matrix(traj: Trajectory, n: int) -> np.ndarray:
    """Row-normalized one-step counts (rows never visited stay zero)."""
    counts = np.zeros((n, n))
    np.add.at(counts, (traj.states[:-1], traj.states[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)


def markov_quotient_statistic(traj: Trajectory, part: Partition) -> QuotientTestResult:
    """
    G-test of H0: P(z_{t+1} | z_t, z_{t-1}) = P(z_{t+1} | z_t) on the lumped path.

    G = 2 sum n_abc ln(n_abc n_b / (n_ab n_bc)), chi-square reference with
    M (M - 1)^2 degrees of freedom.

    Raises:
        InsufficientData: fewer than 100 M^2 steps
    """
    m = part.m
    if m == 1:
        return QuotientTestResult(0.0, 0, 1.0)

    if traj.states.size and int(traj.states.max()) >= part.n:
        raise DimensionMismatch(part.n, int(traj.states.max()) + 1, what="partition")
    required = 100 * m * m
    if len(traj) < required:
        raise InsufficientData(required, len(traj))

    z = np.asarray(part.assignment)[traj.states]
    triples = np.bincount(z[:-2] * m * m + z[1:-1] * m + z[2:], minlength=m ** 3)
    n_abc = triples.reshape(m, m, m).astype(float)
    n_ab = n_abc.sum(axis=2, keepdims=True)
    n_bc = n_abc.sum(axis=0, keepdims=True)
    n_b = n_abc.sum(axis=(0, 2), keepdims=True)

    expected = n_ab * n_bc
    mask = n_abc > 0
    ratio = np.ones_like(n_abc)
    ratio[mask] = (n_abc * n_b)[mask] / expected[mask]
    statistic = float(2.0 * np.sum(n_abc[mask] * np.log(ratio[mask])))
    statistic = max(statistic, 0.0)

    dof = m * (m - 1) ** 2
    return QuotientTestResult(statistic, dof, float(chi2.sf(statistic, dof)))
