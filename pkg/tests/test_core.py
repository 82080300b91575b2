import doctest
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oe_chaos import core
from oe_chaos.core import (
    CoarseGraining,
    OutcomeDistribution,
    QuantumState,
    ValidationError,
    entropy_terms,
    macrostate_probabilities,
    observational_entropy,
    shannon_entropy,
    state_entropy,
    uniform_partition,
)


def random_state(d, seed):
    rng = np.random.default_rng(seed)
    return QuantumState.normalized(rng.normal(size=d) + 1j * rng.normal(size=d))


def test_doctests():
    assert doctest.testmod(core).failed == 0


class TestPartition:
    def test_pairs(self):
        cg = uniform_partition(8, 2)
        assert cg.n_cells == 4
        assert [c.tolist() for c in cg.cells] == [[0, 1], [2, 3], [4, 5], [6, 7]]
        assert np.all(cg.volumes == 2)

    def test_single_cell(self):
        cg = uniform_partition(8, 8)
        assert cg.n_cells == 1 and cg.volumes.tolist() == [8.0]

    def test_non_divisible(self):
        with pytest.raises(ValidationError, match="d=8.*chi=3"):
            uniform_partition(8, 3)

    def test_from_cells_rejects_overlap_and_gaps(self):
        with pytest.raises(ValidationError, match="overlap"):
            CoarseGraining.from_cells([[0, 1], [1, 2]], d=3)
        with pytest.raises(ValidationError, match="cover"):
            CoarseGraining.from_cells([[0], [2]], d=3)

    def test_general_matches_uniform(self):
        psi = random_state(12, 3)
        general = CoarseGraining.from_cells([[0, 1, 2], [3, 4, 5], [6, 7, 8], [9, 10, 11]])
        assert state_entropy(psi, general) == pytest.approx(state_entropy(psi, uniform_partition(12, 3)), abs=1e-14)


class TestProbabilities:
    def test_basis_state(self):
        psi = QuantumState(np.array([1, 0, 0, 0]))
        assert macrostate_probabilities(psi, uniform_partition(4, 2)).probabilities.tolist() == [1.0, 0.0]

    def test_uniform_state(self):
        psi = QuantumState.normalized(np.ones(4))
        assert np.allclose(macrostate_probabilities(psi, uniform_partition(4, 2)).probabilities, [0.5, 0.5])

    def test_direct_summation(self):
        psi = random_state(16, 11)
        p = macrostate_probabilities(psi, uniform_partition(16, 4)).probabilities
        direct = [sum(abs(psi.amplitudes[n]) ** 2 for n in range(4 * k, 4 * k + 4)) for k in range(4)]
        assert np.max(np.abs(p - direct)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="dimension"):
            macrostate_probabilities(random_state(8, 0), uniform_partition(16, 4))

    def test_state_norm_checked(self):
        with pytest.raises(ValidationError, match="norm"):
            QuantumState(np.array([1.0, 1.0]))


class TestEntropy:
    def test_single_occupied_cell(self):
        assert observational_entropy(OutcomeDistribution([1.0, 0.0], [2.0, 2.0])) == pytest.approx(math.log(2), abs=1e-15)

    def test_shannon_limit(self):
        d = 16
        assert observational_entropy(OutcomeDistribution(np.full(d, 1 / d), np.ones(d))) == pytest.approx(math.log(d))

    def test_single_macrostate(self):
        assert observational_entropy(OutcomeDistribution([1.0], [32.0])) == pytest.approx(math.log(32))

    def test_two_cell_value(self):
        expected = -0.7 * math.log(0.35) - 0.3 * math.log(0.15)
        assert observational_entropy(OutcomeDistribution([0.7, 0.3], [2.0, 2.0])) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(1.3040, abs=1e-4)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError, match="negative"):
            OutcomeDistribution([1.1, -0.1], [1.0, 1.0])
        with pytest.raises(ValidationError, match="volume"):
            OutcomeDistribution([0.5, 0.5], [1.0, 0.0])
        with pytest.raises(ValidationError, match="sum"):
            OutcomeDistribution([0.5, 0.4], [1.0, 1.0])

    def test_tiny_probabilities_are_zero(self):
        assert entropy_terms(np.array([1.0, 1e-320]), 1.0) == 0.0


chis = st.sampled_from([1, 2, 4, 8])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), chi=chis, merge=st.sampled_from([2, 4]))
def test_bounds_and_coarsening_monotone(seed, chi, merge):
    d = 64
    psi = random_state(d, seed)
    fine = state_entropy(psi, uniform_partition(d, chi))
    coarse = state_entropy(psi, uniform_partition(d, chi * merge))
    assert -1e-12 <= fine <= math.log(d) + 1e-12
    assert coarse >= fine - 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), chi=chis)
def test_decomposition_and_rank_one_limit(seed, chi):
    d = 32
    psi = random_state(d, seed)
    dist = macrostate_probabilities(psi, uniform_partition(d, chi))
    p = dist.probabilities
    assert observational_entropy(dist) == pytest.approx(shannon_entropy(p) + float(np.sum(p * np.log(dist.volumes))), abs=1e-12)
    assert state_entropy(psi, uniform_partition(d, 1)) == pytest.approx(shannon_entropy(psi.probabilities()), abs=1e-12)
