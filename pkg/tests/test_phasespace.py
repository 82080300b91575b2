import csv
import math

import numpy as np
import pytest

from oe_chaos.core import OutcomeDistribution, QuantumState, ValidationError
from oe_chaos.models import position_grid
from oe_chaos.phasespace import (
    CoherentStateGrid,
    block_cells,
    coherent_state,
    frame_operator,
    husimi_direct,
    husimi_distribution,
    pgm_from_vectors,
    pgm_povm,
    pgm_probabilities,
    pgm_probability_array,
    sample_counts,
    sample_shots,
)


def hbar(d):
    return 2 * math.pi / d


def random_state(d, seed):
    rng = np.random.default_rng(seed)
    return QuantumState.normalized(rng.normal(size=d) + 1j * rng.normal(size=d), "position")


class TestCoherentState:
    d = 128
    sigma = math.sqrt(hbar(128) / 2)

    def test_normalized(self):
        psi = coherent_state(1.0, 2.0, self.sigma, self.d, hbar(self.d))
        assert abs(np.vdot(psi.amplitudes, psi.amplitudes) - 1) < 1e-12

    @pytest.mark.parametrize("q0", [0.3, 2.0, 6.1])
    def test_circular_mean(self, q0):
        psi = coherent_state(q0, 0.5, self.sigma, self.d, hbar(self.d))
        mean = np.angle(np.sum(np.abs(psi.amplitudes) ** 2 * np.exp(1j * position_grid(self.d))))
        assert abs((mean - q0 + math.pi) % (2 * math.pi) - math.pi) < 1e-8

    @pytest.mark.parametrize("dq", [0.05, 0.1, 0.3])
    def test_overlap_formula(self, dq):
        a = coherent_state(2.0, 0.0, self.sigma, self.d, hbar(self.d)).amplitudes
        b = coherent_state(2.0 + dq, 0.0, self.sigma, self.d, hbar(self.d)).amplitudes
        assert abs(np.vdot(a, b)) ** 2 == pytest.approx(math.exp(-(dq**2) / (4 * self.sigma**2)), abs=1e-6)

    def test_too_wide_rejected(self):
        with pytest.raises(ValidationError, match="too wide"):
            coherent_state(0.0, 0.0, 2.0, 64, hbar(64))


class TestGrid:
    def test_shapes(self):
        g = CoherentStateGrid.for_cells(128, 64, hbar(64))
        assert (g.n_q, g.n_p, g.n_cells) == (16, 8, 128)
        assert np.allclose(np.diff(g.q_centers), 2 * math.pi / 16)
        assert g.sigma == pytest.approx(math.sqrt(hbar(64) / 2))

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValidationError):
            CoherentStateGrid.for_cells(48, 64, hbar(64))

    def test_off_lattice_window_has_no_stft(self):
        g = CoherentStateGrid(4, 4, 64, hbar(64), p_window=(-1.0, 1.1))
        assert g.p_bins is None
        with pytest.raises(ValidationError, match="STFT"):
            g.overlaps(np.ones(64))


class TestHusimi:
    @pytest.mark.parametrize("d,n_cells", [(64, 64), (128, 128), (32, 256)])
    def test_stft_matches_direct(self, d, n_cells):
        g = CoherentStateGrid.for_cells(n_cells, d, hbar(d))
        psi = random_state(d, d + n_cells)
        assert np.max(np.abs(husimi_distribution(psi, g).values - husimi_direct(psi, g))) < 1e-10

    def test_argmax_at_centre(self):
        g = CoherentStateGrid.for_cells(64, 64, hbar(64))
        k, l = 3, 5
        psi = coherent_state(g.q_centers[k], g.p_centers[l], g.sigma, 64, hbar(64))
        Q = husimi_distribution(psi, g).values
        assert np.unravel_index(np.argmax(Q), Q.shape) == (k, l)
        assert Q.min() >= 0

    def test_momentum_eigenstate_uniform_rows(self):
        d = 64
        psi = QuantumState.normalized(np.exp(3j * position_grid(d)), "position")
        Q = husimi_distribution(psi, CoherentStateGrid.for_cells(64, d, hbar(d))).values
        assert np.max(np.abs(Q - Q[0])) < 1e-10

    def test_csv_export(self, tmp_path):
        g = CoherentStateGrid.for_cells(16, 16, hbar(16))
        field = husimi_distribution(random_state(16, 0), g)
        path = tmp_path / "q.csv"
        field.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# husimi")
        rows = list(csv.reader(lines[1:]))
        assert rows[0] == ["q_index", "p_index", "q", "p", "value"]
        assert len(rows) == 17
        assert float(rows[6][4]) == pytest.approx(field.values[1, 1], rel=1e-15)


class TestFrameOperator:
    def test_trace_and_hermitian(self):
        g = CoherentStateGrid.for_cells(64, 32, hbar(32))
        G = frame_operator(g)
        assert np.trace(G).real == pytest.approx(64, abs=1e-9)
        assert np.max(np.abs(G - G.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(G).min() > -1e-10

    def test_matches_outer_product_sum(self):
        g = CoherentStateGrid.for_cells(16, 16, hbar(16))
        A = g.states()
        direct = sum(np.outer(A[:, i], A[:, i].conj()) for i in range(g.n_cells))
        assert np.max(np.abs(frame_operator(g) - direct)) < 1e-12
        assert np.max(np.abs(frame_operator(g, weights=np.ones(16)) - direct)) < 1e-12


class TestPGM:
    def test_completeness(self):
        povm = pgm_povm(CoherentStateGrid.for_cells(256, 64, hbar(64)))
        M = povm.elements()
        assert povm.rank == 64
        assert np.linalg.norm(M.sum(0) - np.eye(64), 2) < 1e-8
        assert povm.completeness_defect < 1e-8

    def test_elements_psd(self):
        M = pgm_povm(CoherentStateGrid.for_cells(64, 32, hbar(32))).elements()
        assert np.linalg.eigvalsh(M).min() >= -1e-10

    def test_projective_limit(self):
        d = 16
        povm = pgm_from_vectors(np.eye(d))
        assert np.allclose(povm.elements(), [np.diag(np.eye(d)[i]) for i in range(d)], atol=1e-14)
        psi = random_state(d, 2)
        assert np.max(np.abs(pgm_probability_array(psi.amplitudes, povm) - psi.probabilities())) < 1e-12

    def test_dense_born_rule(self):
        d = 32
        povm = pgm_povm(CoherentStateGrid.for_cells(64, d, hbar(d)))
        psi = random_state(d, 9)
        rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
        dense = np.einsum("ij,nji->n", rho, povm.elements()).real
        dist = pgm_probabilities(psi, povm)
        assert np.max(np.abs(dist.probabilities - dense)) < 1e-10
        assert dist.probabilities.sum() == pytest.approx(1, abs=1e-8)
        assert np.allclose(dist.volumes, d / 64)

    def test_coherent_state_peaks_in_its_cell(self):
        g = CoherentStateGrid.for_cells(64, 64, hbar(64))
        povm = pgm_povm(g)
        psi = coherent_state(g.q_centers[6], g.p_centers[2], g.sigma, 64, hbar(64))
        assert np.argmax(pgm_probabilities(psi, povm).probabilities) == 6 * g.n_p + 2

    def test_uniform_weights_match_unweighted(self):
        g = CoherentStateGrid.for_cells(64, 32, hbar(32))
        psi = random_state(32, 4).amplitudes
        a = pgm_probability_array(psi, pgm_povm(g))
        b = pgm_probability_array(psi, pgm_povm(g, weights=np.ones(64)))
        assert np.max(np.abs(a - b)) < 1e-10

    def test_span_deficient_grid_renormalises(self, caplog):
        povm = pgm_povm(CoherentStateGrid.for_cells(4, 64, hbar(64)))
        assert povm.span_deficient and povm.completeness_defect > 1e-8
        assert "span-deficient" in caplog.text
        p = pgm_probabilities(random_state(64, 1), povm).probabilities
        assert p.sum() == pytest.approx(1, abs=1e-12) and p.min() >= 0

    def test_bad_cutoff(self):
        with pytest.raises(ValidationError):
            pgm_povm(CoherentStateGrid.for_cells(16, 16, hbar(16)), eig_cutoff=1.0)

    def test_block_cells(self):
        p = np.arange(16, dtype=float)
        merged = block_cells(p, 4, 4, 2, 2)
        assert merged.tolist() == [0 + 1 + 4 + 5, 2 + 3 + 6 + 7, 8 + 9 + 12 + 13, 10 + 11 + 14 + 15]
        with pytest.raises(ValidationError):
            block_cells(p, 4, 4, 3, 2)


class TestShots:
    def test_large_sample_frequencies(self):
        freq = sample_shots(OutcomeDistribution([0.5, 0.5], [1.0, 1.0]), 10**7, seed=0).probabilities
        assert np.max(np.abs(freq - 0.5)) < 1e-3

    def test_certain_outcome(self):
        dist = sample_shots(OutcomeDistribution([1.0, 0.0], [2.0, 3.0]), 17, seed=5)
        assert dist.probabilities.tolist() == [1.0, 0.0]
        assert dist.volumes.tolist() == [2.0, 3.0]

    def test_counts_sum_and_determinism(self):
        p = np.random.default_rng(0).dirichlet(np.ones(10), size=3)
        a = sample_counts(p, 1234, np.random.default_rng(8))
        b = sample_counts(p, 1234, np.random.default_rng(8))
        assert np.array_equal(a, b) and np.all(a.sum(axis=-1) == 1234)

    def test_zero_shots_rejected(self):
        with pytest.raises(ValidationError):
            sample_shots(OutcomeDistribution([0.5, 0.5], [1.0, 1.0]), 0)
