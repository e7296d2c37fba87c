import numpy as np
import pytest

from app.empirics import (
    RNG_NAME,
    Trajectory,
    empirical_transition_matrix,
    markov_quotient_statistic,
    simulate,
)
from chains import EIGHT_STATE_LUMPINGS, blocks
from core.chain import Partition
from core.errors import InsufficientData


class TestSimulate:
    def test_same_seed_same_path(self, eight):
        a = simulate(eight, 0, 500, seed=7)
        b = simulate(eight, 0, 500, seed=7)
        np.testing.assert_array_equal(a.states, b.states)
        assert a.rng == RNG_NAME

    def test_different_seed(self, eight):
        a = simulate(eight, 0, 500, seed=7)
        b = simulate(eight, 0, 500, seed=8)
        assert not np.array_equal(a.states, b.states)

    def test_shape(self, eight):
        traj = simulate(eight, 4, 1000, seed=1)
        assert len(traj) == 1000
        assert traj.states[0] == 4
        assert traj.states.min() >= 0 and traj.states.max() <= 7
        assert traj.one_based()[0] == 5

    def test_never_takes_zero_probability_steps(self, eight):
        traj = simulate(eight, 0, 5000, seed=3)
        steps = eight.entries[traj.states[:-1], traj.states[1:]]
        assert steps.min() > 0

    def test_length_one(self, three):
        assert simulate(three, 2, 1, seed=0).states.tolist() == [2]

    @pytest.mark.parametrize("x0, T", [(-1, 10), (3, 10), (0, 0)])
    def test_rejects(self, three, x0, T):
        with pytest.raises(ValueError):
            simulate(three, x0, T, seed=0)

    def test_empirical_matrix_within_bands(self, eight):
        traj = simulate(eight, 0, 100_000, seed=11)
        empirical = empirical_transition_matrix(traj, 8)
        visits = np.bincount(traj.states[:-1], minlength=8)[:, None]
        sigma = np.sqrt(eight.entries * (1 - eight.entries) / visits)
        outside = np.abs(empirical - eight.entries) > 3 * sigma + 1e-12
        # at most one of the 64 entries may leave its 3-sigma band
        assert outside.sum() <= 1

    def test_empirical_unvisited_rows_are_zero(self):
        traj = Trajectory(np.array([0, 1, 0, 1]), seed=0)
        empirical = empirical_transition_matrix(traj, 3)
        np.testing.assert_array_equal(empirical, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])


class TestQuotientStatistic:
    def test_single_lump(self, eight):
        traj = simulate(eight, 0, 10, seed=0)
        assert markov_quotient_statistic(traj, Partition.single_lump(8)) == (0.0, 0, 1.0)

    def test_insufficient_data(self, eight):
        traj = simulate(eight, 0, 399, seed=0)
        with pytest.raises(InsufficientData) as info:
            markov_quotient_statistic(traj, EIGHT_STATE_LUMPINGS[1])
        assert info.value.required == 400
        assert info.value.exit_code == 1

    def test_degrees_of_freedom(self, eight):
        traj = simulate(eight, 0, 5000, seed=0)
        assert markov_quotient_statistic(traj, EIGHT_STATE_LUMPINGS[1]).dof == 2
        assert markov_quotient_statistic(traj, EIGHT_STATE_LUMPINGS[2]).dof == 12

    def test_rejects_non_lumpable(self, three):
        part = blocks([1, 3], [2], n=3)
        for seed in range(5):
            result = markov_quotient_statistic(simulate(three, 0, 100_000, seed), part)
            assert result.pvalue < 0.01

    def test_lumpable_rarely_rejected(self, eight):
        rejections = sum(
            markov_quotient_statistic(simulate(eight, 0, 100_000, seed), EIGHT_STATE_LUMPINGS[1]).pvalue < 0.01
            for seed in range(20)
        )
        assert rejections <= 3
