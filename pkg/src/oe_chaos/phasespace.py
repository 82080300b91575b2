"""Coherent-state grids, Husimi distributions and the pretty-good-measurement POVM.

Coherent states live on the discrete ring ``x_n = 2 pi n / d``.  Grid momenta
are integer multiples of ``hbar_eff``, which makes every grid state a
Gaussian window times a DFT mode; Husimi overlaps for a whole q-row then
come from one FFT of the windowed state (a short-time Fourier transform).

The PGM elements ``M_kl = G^{-1/2}|a_kl><a_kl|G^{-1/2}`` are never stored:
``<psi|M_kl|psi> = |<a_kl|G^{-1/2} psi>|^2`` is the Husimi function of
``G^{-1/2} psi``, evaluated by the same STFT.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import OutcomeDistribution, QuantumState, ValidationError
from .models import position_grid

logger = logging.getLogger(__name__)

WRAP_TOL = 1e-12
COMPLETENESS_TOL = 1e-8


def _wrapped_gaussian(x, q0, sigma):
    """Unnormalised Gaussian on the ring, summed over the nearest images."""
    dx = x - q0
    return sum(np.exp(-((dx + 2 * np.pi * j) ** 2) / (4 * sigma**2)) for j in (-1, 0, 1))


def _check_sigma(sigma):
    if not sigma > 0:
        raise ValidationError(f"coherent-state width must be > 0, got {sigma}")
    # farthest neglected image sits at least 2 pi away
    if np.exp(-((2 * np.pi) ** 2) / (4 * sigma**2)) > WRAP_TOL:
        raise ValidationError(f"sigma={sigma} too wide for wrapped-Gaussian tolerance {WRAP_TOL}")


def coherent_state(q0: float, p0: float, sigma: float, d: int, hbar_eff: float) -> QuantumState:
    """Minimum-uncertainty wave packet centred at ``(q0, p0)``, periodised and normalised."""
    _check_sigma(sigma)
    x = position_grid(d)
    amp = np.zeros(d, dtype=complex)
    for j in (-1, 0, 1):
        dx = x + 2 * np.pi * j - q0
        amp += np.exp(-(dx**2) / (4 * sigma**2)) * np.exp(1j * p0 * dx / hbar_eff)
    amp *= (2 * np.pi * sigma**2) ** -0.25
    return QuantumState.normalized(amp, "position")


@dataclass(frozen=True)
class CoherentStateGrid:
    """Rectangular ``n_q x n_p`` lattice of coherent-state centres.

    q-centres sit at cell midpoints of ``[0, 2 pi)``; p-centres at cell
    midpoints of ``p_window`` (default: the full momentum window
    ``[-d hbar/2, d hbar/2)``).  Cells are flattened q-major.
    """

    n_q: int
    n_p: int
    d: int
    hbar_eff: float
    p_window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.n_q < 1 or self.n_p < 1:
            raise ValidationError("grid needs at least one centre per axis")
        if self.p_window is None:
            half = self.d * self.hbar_eff / 2
            object.__setattr__(self, "p_window", (-half, half))
        lo, hi = self.p_window
        if not hi > lo:
            raise ValidationError(f"empty momentum window {self.p_window}")
        _check_sigma(self.sigma)

    @classmethod
    def for_cells(cls, n_cells: int, d: int, hbar_eff: float, p_window=None) -> "CoherentStateGrid":
        """Grid of ``n_cells`` (a power of two): square when possible, else twice as many q rows."""
        k = int(round(np.log2(n_cells)))
        if 2**k != n_cells:
            raise ValidationError(f"n_cells must be a power of two, got {n_cells}")
        n_p = 2 ** (k // 2)
        return cls(n_cells // n_p, n_p, d, hbar_eff, p_window)

    @property
    def n_cells(self) -> int:
        return self.n_q * self.n_p

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.hbar_eff / 2))

    @cached_property
    def q_centers(self) -> np.ndarray:
        return (np.arange(self.n_q) + 0.5) * 2 * np.pi / self.n_q

    @cached_property
    def p_centers(self) -> np.ndarray:
        lo, hi = self.p_window
        return lo + (np.arange(self.n_p) + 0.5) * (hi - lo) / self.n_p

    @cached_property
    def p_bins(self) -> np.ndarray | None:
        """Integer momentum index of each p-centre, or None if off the DFT lattice."""
        m = self.p_centers / self.hbar_eff
        mi = np.rint(m)
        if np.max(np.abs(m - mi)) > 1e-9:
            return None
        return mi.astype(int)

    @cached_property
    def windows(self) -> np.ndarray:
        """Normalised real windows ``w_k(n)``, shape ``(n_q, d)``."""
        x = position_grid(self.d)
        w = np.stack([_wrapped_gaussian(x, q, self.sigma) for q in self.q_centers])
        return w / np.linalg.norm(w, axis=1, keepdims=True)

    def states(self) -> np.ndarray:
        """All grid states as columns, shape ``(d, n_cells)``; dense, for small ``d``."""
        cols = [
            coherent_state(q, p, self.sigma, self.d, self.hbar_eff).amplitudes
            for q in self.q_centers
            for p in self.p_centers
        ]
        return np.stack(cols, axis=1)

    def overlaps(self, psi: np.ndarray) -> np.ndarray:
        """``<a_kl|psi>`` up to a per-cell phase, shape ``(..., n_q, n_p)``, via STFT."""
        if self.p_bins is None:
            raise ValidationError("STFT needs p-centres on integer multiples of hbar_eff")
        psi = np.asarray(psi)
        if psi.shape[-1] != self.d:
            raise ValidationError(f"state dimension {psi.shape[-1]} != grid dimension {self.d}")
        spec = np.fft.fft(psi[..., None, :] * self.windows, axis=-1)
        return spec[..., self.p_bins % self.d]


@dataclass(frozen=True)
class HusimiField:
    values: np.ndarray
    grid: CoherentStateGrid

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# husimi n_q={self.grid.n_q} n_p={self.grid.n_p} d={self.grid.d} hbar_eff={self.grid.hbar_eff!r}\n")
            w = csv.writer(fh)
            w.writerow(["q_index", "p_index", "q", "p", "value"])
            for k, q in enumerate(self.grid.q_centers):
                for l, p in enumerate(self.grid.p_centers):
                    w.writerow([k, l, f"{q:.12g}", f"{p:.12g}", f"{self.values[k, l]:.17g}"])


def husimi_distribution(state: QuantumState, grid: CoherentStateGrid) -> HusimiField:
    """Raw ``Q(q_k, p_l) = |<a_kl|psi>|^2`` (unnormalised)."""
    if state.basis != "position":
        raise ValidationError("husimi_distribution expects a position-basis state")
    return HusimiField(np.abs(grid.overlaps(state.amplitudes)) ** 2, grid)


def husimi_direct(state: QuantumState, grid: CoherentStateGrid) -> np.ndarray:
    """Reference overlaps from explicitly constructed coherent states."""
    A = grid.states()
    return (np.abs(A.conj().T @ state.amplitudes) ** 2).reshape(grid.n_q, grid.n_p)


def frame_operator(grid: CoherentStateGrid, weights=None) -> np.ndarray:
    """``G = sum_kl w_kl |a_kl><a_kl|`` (uniform weights by default).

    For uniform weights on a DFT-aligned grid the sum factorises into the
    Hadamard product of the window Gram sum and a momentum circulant.
    """
    if weights is None and grid.p_bins is not None:
        W = grid.windows.T @ grid.windows
        lag = np.arange(grid.d)
        c = np.exp(2j * np.pi * np.outer(lag, grid.p_bins) / grid.d).sum(axis=1)
        diff = (lag[:, None] - lag[None, :]) % grid.d
        return W * c[diff]
    A = grid.states()
    w = np.ones(grid.n_cells) if weights is None else np.asarray(weights, dtype=float).ravel()
    return (A * w) @ A.conj().T


@dataclass(frozen=True)
class POVM:
    """Pretty good measurement built from a frame of rank-one states.

    Stored in factorised form: ``inv_sqrt = G^{-1/2}`` (pseudo-inverse on the
    retained spectrum) plus the frame itself, either a coherent-state grid
    or an explicit ``(d, n)`` matrix of column vectors.
    """

    inv_sqrt: np.ndarray
    rank: int
    completeness_defect: float
    grid: CoherentStateGrid | None = None
    vectors: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.inv_sqrt.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.grid.n_cells if self.grid is not None else self.vectors.shape[1]

    @property
    def span_deficient(self) -> bool:
        return self.rank < self.d

    @property
    def cell_volume(self) -> float:
        return self.d / self.n_outcomes

    def measurement_vectors(self) -> np.ndarray:
        """Columns ``sqrt(w_i) G^{-1/2}|a_i>``, so ``M_i = |b_i><b_i|``."""
        A = self.grid.states() if self.grid is not None else self.vectors
        if self.weights is not None:
            A = A * np.sqrt(self.weights)
        return self.inv_sqrt @ A

    def elements(self) -> np.ndarray:
        """Dense POVM elements, shape ``(n, d, d)``; test-sized ``d`` only."""
        B = self.measurement_vectors()
        return np.einsum("in,jn->nij", B, B.conj())

    def amplitudes(self, psi: np.ndarray) -> np.ndarray:
        """``<b_i|psi>`` for batched ``psi``; shape ``(..., n_outcomes)``."""
        phi = np.asarray(psi) @ self.inv_sqrt.T
        if self.grid is None:
            return phi @ self.vectors.conj()
        if self.weights is None and self.grid.p_bins is not None:
            out = self.grid.overlaps(phi)
            return out.reshape(*out.shape[:-2], -1)
        amp = phi @ self.grid.states().conj()
        if self.weights is not None:
            amp = amp * np.sqrt(self.weights)
        return amp


def _inverse_sqrt(G: np.ndarray, eig_cutoff: float):
    evals, U = np.linalg.eigh(G)
    keep = evals > eig_cutoff * evals.max()
    inv = np.zeros_like(evals)
    inv[keep] = evals[keep] ** -0.5
    inv_sqrt = (U * inv) @ U.conj().T
    completeness = (U * (inv**2 * evals)) @ U.conj().T
    defect = float(np.linalg.norm(completeness - np.eye(G.shape[0]), 2))
    return inv_sqrt, int(keep.sum()), defect


def pgm_povm(grid: CoherentStateGrid, eig_cutoff: float = 1e-12, weights=None) -> POVM:
    """PGM on a coherent-state grid; ``weights`` are optional prior weights."""
    if not 0 < eig_cutoff < 1:
        raise ValidationError(f"eig_cutoff must lie in (0, 1), got {eig_cutoff}")
    w = None if weights is None else np.asarray(weights, dtype=float).ravel()
    inv_sqrt, rank, defect = _inverse_sqrt(frame_operator(grid, w), eig_cutoff)
    if rank < grid.d:
        logger.warning("span-deficient grid: frame rank %d < d=%d", rank, grid.d)
    return POVM(inv_sqrt, rank, defect, grid=grid, weights=w)


def pgm_from_vectors(vectors: np.ndarray, eig_cutoff: float = 1e-12) -> POVM:
    """PGM for an arbitrary frame given as columns of ``vectors``."""
    A = np.asarray(vectors, dtype=complex)
    inv_sqrt, rank, defect = _inverse_sqrt(A @ A.conj().T, eig_cutoff)
    if rank < A.shape[0]:
        logger.warning("span-deficient frame: rank %d < d=%d", rank, A.shape[0])
    return POVM(inv_sqrt, rank, defect, vectors=A)


def pgm_probability_array(psi: np.ndarray, povm: POVM) -> np.ndarray:
    """Outcome probabilities for batched ``psi``, renormalised if the POVM is incomplete."""
    p = np.abs(povm.amplitudes(psi)) ** 2
    total = p.sum(axis=-1, keepdims=True)
    if povm.completeness_defect > COMPLETENESS_TOL:
        logger.info("renormalising PGM probabilities (completeness defect %.3g)", povm.completeness_defect)
        p = p / total
    return p


def pgm_probabilities(state: QuantumState, povm: POVM) -> OutcomeDistribution:
    """``p_i = <psi|M_i|psi>`` with equal volumes ``d / n_outcomes``."""
    if state.dim != povm.d:
        raise ValidationError(f"state dimension {state.dim} != POVM dimension {povm.d}")
    p = pgm_probability_array(state.amplitudes, povm)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    return OutcomeDistribution(p, np.full(p.size, povm.cell_volume))


def block_cells(probs: np.ndarray, n_q: int, n_p: int, out_q: int, out_p: int) -> np.ndarray:
    """Merge an ``n_q x n_p`` cell array (flattened q-major) into ``out_q x out_p`` blocks."""
    if n_q % out_q or n_p % out_p:
        raise ValidationError(f"cannot merge {n_q}x{n_p} cells into {out_q}x{out_p} blocks")
    probs = np.asarray(probs)
    shaped = probs.reshape(*probs.shape[:-1], out_q, n_q // out_q, out_p, n_p // out_p)
    return shaped.sum(axis=(-3, -1)).reshape(*probs.shape[:-1], out_q * out_p)


def sample_counts(probs: np.ndarray, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts for each row of ``probs``."""
    if n_shots < 1:
        raise ValidationError("n_shots must be >= 1")
    probs = np.asarray(probs, dtype=float)
    flat = probs.reshape(-1, probs.shape[-1])
    flat = np.clip(flat, 0.0, None)
    flat = flat / flat.sum(axis=1, keepdims=True)
    counts = np.stack([rng.multinomial(n_shots, row) for row in flat])
    return counts.reshape(probs.shape)


def sample_shots(dist: OutcomeDistribution, n_shots: int, seed: int = 0) -> OutcomeDistribution:
    """Empirical frequencies from ``n_shots`` multinomial draws; volumes unchanged."""
    counts = sample_counts(dist.probabilities, n_shots, np.random.default_rng(seed))
    return OutcomeDistribution(counts / n_shots, dist.volumes)
