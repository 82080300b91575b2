"""Kicked-rotor Floquet propagators and the Aubry-Andre Hamiltonian.

Grid conventions used throughout the package:

* position grid ``x_n = 2 pi n / d``, ``n = 0..d-1``;
* momentum grid ``p_m = hbar_eff (m + beta)``, ``m = -d/2 .. d/2-1``, stored
  in this centred order (index 0 is ``m = -d/2``).

One kick period is kick-then-free: ``psi -> IFFT[free * FFT[kick * psi]]``.

When ``hbar_eff * d`` is an integer multiple of ``2 pi`` the free phase is
periodic in ``m`` with period ``d`` (up to a global phase), so the FFT grid
is an exact quantisation of the map on a torus of ``hbar_eff d / 2 pi``
momentum cells and probability crossing the window edge is physical.  For
any other ``hbar_eff`` the window is a truncated cylinder and a leakage
guard applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .core import QuantumState, ValidationError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
UNIT_MODULUS_TOL = 1e-12
FLOQUET_MAX_DIM = 1024


class LeakageError(RuntimeError):
    """Probability reached the edge of a truncated (non-periodic) momentum window."""


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and n & (n - 1) == 0


def torus_cells(hbar_eff: float, d: int) -> int | None:
    """Number of 2*pi momentum cells if the grid is torus-periodic, else None."""
    cells = hbar_eff * d / (2 * np.pi)
    n = round(cells)
    if n >= 1 and abs(cells - n) < 1e-9 * max(1.0, cells) and (n * d) % 2 == 0:
        return n
    return None


@dataclass(frozen=True)
class KickedRotorParams:
    K: float
    d: int = 1024
    hbar_eff: float | None = None
    beta: float = 0.0

    def __post_init__(self):
        if self.hbar_eff is None:
            object.__setattr__(self, "hbar_eff", 2 * np.pi / self.d)
        _check_rotor(self.d, self.hbar_eff, self.beta)
        if not self.K >= 0:
            raise ValidationError(f"kick strength K must be >= 0, got {self.K}")


@dataclass(frozen=True)
class SingularKickedRotorParams:
    epsilon: float
    alpha: float
    b: float
    delta: float = 1e-6
    d: int = 1024
    hbar_eff: float | None = None
    beta: float = 0.0

    def __post_init__(self):
        if self.hbar_eff is None:
            object.__setattr__(self, "hbar_eff", 2 * np.pi / self.d)
        _check_rotor(self.d, self.hbar_eff, self.beta)
        if not self.delta > 0:
            raise ValidationError(f"cutoff delta must be > 0, got {self.delta}")
        if not -1.0 <= self.alpha <= 1.0:
            raise ValidationError(f"singularity exponent alpha must lie in [-1, 1], got {self.alpha}")


def _check_rotor(d, hbar_eff, beta):
    if not _is_power_of_two(d):
        raise ValidationError(f"Hilbert dimension d must be a power of two, got {d}")
    if not hbar_eff > 0:
        raise ValidationError(f"hbar_eff must be > 0, got {hbar_eff}")
    if not 0.0 <= beta < 1.0:
        raise ValidationError(f"quasimomentum beta must lie in [0, 1), got {beta}")


@dataclass(frozen=True)
class AubryAndreParams:
    lam: float
    N: int = 1024
    J: float = 1.0
    phi: float = 0.0
    beta_irr: float = GOLDEN
    periodic: bool = False

    def __post_init__(self):
        if not self.J > 0:
            raise ValidationError(f"hopping J must be > 0, got {self.J}")
        if not self.lam >= 0:
            raise ValidationError(f"modulation lambda must be >= 0, got {self.lam}")
        if self.N < 2:
            raise ValidationError(f"chain needs N >= 2 sites, got {self.N}")


def position_grid(d: int) -> np.ndarray:
    return 2 * np.pi * np.arange(d) / d


def momentum_indices(d: int) -> np.ndarray:
    """Centred integer momenta ``-d/2 .. d/2-1``."""
    return np.arange(-(d // 2), d - d // 2)


def momentum_grid(d: int, hbar_eff: float, beta: float = 0.0) -> np.ndarray:
    return hbar_eff * (momentum_indices(d) + beta)


@dataclass(frozen=True)
class FloquetPropagatorSpec:
    """Diagonal factors of one kick period.

    ``free_phase`` may carry a leading batch axis (one row per quasimomentum
    member); ``kick_phase`` is shared.
    """

    kick_phase: np.ndarray
    free_phase: np.ndarray
    hbar_eff: float
    beta: float | np.ndarray = 0.0

    def __post_init__(self):
        for name in ("kick_phase", "free_phase"):
            arr = np.asarray(getattr(self, name), dtype=np.complex128)
            if np.max(np.abs(np.abs(arr) - 1.0)) > UNIT_MODULUS_TOL:
                raise ValidationError(f"{name} entries must have unit modulus")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.free_phase.shape[-1] != self.kick_phase.shape[-1]:
            raise ValidationError("kick and free phases cover different dimensions")

    @property
    def d(self) -> int:
        return self.kick_phase.shape[-1]

    @cached_property
    def free_fft_order(self) -> np.ndarray:
        return np.fft.ifftshift(self.free_phase, axes=-1)

    @property
    def n_cells(self) -> int | None:
        return torus_cells(self.hbar_eff, self.d)

    @property
    def is_torus(self) -> bool:
        return self.n_cells is not None


def _free_phase(d, hbar_eff, beta):
    beta = np.asarray(beta, dtype=float)
    p = hbar_eff * (momentum_indices(d) + beta[..., None])
    return np.exp(-1j * p**2 / (2 * hbar_eff))


def kr_build_propagator(params: KickedRotorParams, betas=None) -> FloquetPropagatorSpec:
    """One-period factors for ``H = p^2/2 + K cos x sum_n delta(t-n)``.

    ``betas`` (optional array) builds a batched propagator with one free
    phase row per quasimomentum, overriding ``params.beta``.
    """
    x = position_grid(params.d)
    beta = params.beta if betas is None else np.asarray(betas, dtype=float)
    kick = np.exp(-1j * params.K * np.cos(x) / params.hbar_eff)
    return FloquetPropagatorSpec(kick, _free_phase(params.d, params.hbar_eff, beta), params.hbar_eff, beta)


def skr_potential(x, params: SingularKickedRotorParams):
    """Periodically regularised power-law kick ``eps (sqrt(2(1-cos x)+delta^2) + |b|)^alpha``."""
    s = np.sqrt(2.0 * (1.0 - np.cos(x)) + params.delta**2)
    return params.epsilon * (s + abs(params.b)) ** params.alpha


def skr_force(x, params: SingularKickedRotorParams):
    """``-dV/dx`` of :func:`skr_potential`."""
    s = np.sqrt(2.0 * (1.0 - np.cos(x)) + params.delta**2)
    dv = params.epsilon * params.alpha * (s + abs(params.b)) ** (params.alpha - 1.0) * np.sin(x) / s
    return -dv


def skr_build_propagator(params: SingularKickedRotorParams, betas=None) -> FloquetPropagatorSpec:
    x = position_grid(params.d)
    beta = params.beta if betas is None else np.asarray(betas, dtype=float)
    kick = np.exp(-1j * skr_potential(x, params) / params.hbar_eff)
    return FloquetPropagatorSpec(kick, _free_phase(params.d, params.hbar_eff, beta), params.hbar_eff, beta)


def build_propagator(params, betas=None) -> FloquetPropagatorSpec:
    if isinstance(params, KickedRotorParams):
        return kr_build_propagator(params, betas)
    if isinstance(params, SingularKickedRotorParams):
        return skr_build_propagator(params, betas)
    raise TypeError(f"no Floquet propagator for {type(params).__name__}")


def to_momentum(psi: np.ndarray) -> np.ndarray:
    """Position amplitudes -> centred momentum amplitudes (unitary DFT)."""
    return np.fft.fftshift(np.fft.fft(psi, axis=-1, norm="ortho"), axes=-1)


def to_position(phi: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.ifftshift(phi, axes=-1), axis=-1, norm="ortho")


def step_array(psi: np.ndarray, prop: FloquetPropagatorSpec) -> np.ndarray:
    """Array version of :func:`floquet_step`; ``psi`` may be batched ``(..., d)``."""
    phi = np.fft.fft(psi * prop.kick_phase, axis=-1)
    return np.fft.ifft(phi * prop.free_fft_order, axis=-1)


def floquet_step(state: QuantumState, prop: FloquetPropagatorSpec) -> QuantumState:
    if state.basis != "position":
        raise ValidationError("floquet_step expects a position-basis state")
    if state.dim != prop.d:
        raise ValidationError(f"state dimension {state.dim} != propagator dimension {prop.d}")
    if prop.free_phase.ndim != 1:
        raise ValidationError("batched propagator; use step_array for ensembles")
    out = step_array(state.amplitudes, prop)
    # renormalise away accumulated rounding so the strict norm check holds after many steps
    return QuantumState(out / np.linalg.norm(out), "position")


def evolve(psi: np.ndarray, prop: FloquetPropagatorSpec, n_steps: int, leakage_check: bool = True):
    """Yield ``(t, psi_t)`` for ``t = 0..n_steps`` (position basis, batched allowed)."""
    guard = leakage_check and not prop.is_torus
    yield 0, psi
    for t in range(1, n_steps + 1):
        psi = step_array(psi, prop)
        if guard:
            check_leakage(np.abs(to_momentum(psi)) ** 2)
        yield t, psi


def check_leakage(momentum_probs: np.ndarray, edge_fraction: float = 0.05, tol: float = 1e-6) -> None:
    """Raise :class:`LeakageError` if the outer ``edge_fraction`` of the window holds > ``tol``."""
    d = momentum_probs.shape[-1]
    k = max(1, int(np.ceil(edge_fraction * d / 2)))
    edge = momentum_probs[..., :k].sum(axis=-1) + momentum_probs[..., -k:].sum(axis=-1)
    worst = float(np.max(edge))
    if worst > tol:
        raise LeakageError(
            f"{worst:.3g} probability in the outer {edge_fraction:.0%} of the momentum window "
            f"(limit {tol:g}); enlarge d or use a torus-periodic hbar_eff"
        )


def aa_diagonals(params: AubryAndreParams) -> tuple[np.ndarray, np.ndarray]:
    """Onsite and hopping diagonals of the chain (the periodic bond is not included)."""
    j = np.arange(params.N)
    onsite = params.lam * np.cos(2 * np.pi * params.beta_irr * j + params.phi)
    hop = np.full(params.N - 1, -params.J)
    return onsite, hop


def aa_hamiltonian(params: AubryAndreParams) -> np.ndarray:
    onsite, hop = aa_diagonals(params)
    H = np.diag(onsite) + np.diag(hop, 1) + np.diag(hop, -1)
    if params.periodic:
        H[0, -1] = H[-1, 0] = -params.J
    return H


def eigensystem(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a Hermitian matrix."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {H.shape}")
    if not np.allclose(H, H.conj().T, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise ValidationError("matrix is not Hermitian")
    return np.linalg.eigh(H)


def tridiagonal_eigensystem(onsite: np.ndarray, hop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return scipy.linalg.eigh_tridiagonal(onsite, hop)


def floquet_matrix(prop: FloquetPropagatorSpec, max_dim: int = FLOQUET_MAX_DIM) -> np.ndarray:
    """One-period unitary in the position basis, built column by column."""
    if prop.d > max_dim:
        raise ValidationError(f"d={prop.d} exceeds the Floquet diagonalisation cap {max_dim}")
    if prop.free_phase.ndim != 1:
        raise ValidationError("floquet_matrix needs a single-member propagator")
    # row n of step_array(I) is U applied to basis state n, so transpose
    return step_array(np.eye(prop.d, dtype=complex), prop).T


def floquet_states(prop: FloquetPropagatorSpec, max_dim: int = FLOQUET_MAX_DIM):
    """Eigenphases in (-pi, pi] and orthonormal Floquet states (columns, position basis).

    A complex Schur form of a unitary is diagonal up to rounding, so the
    Schur vectors are an orthonormal eigenbasis even for near-degenerate
    quasienergies.
    """
    U = floquet_matrix(prop, max_dim)
    T, Z = scipy.linalg.schur(U, output="complex")
    phases = np.angle(np.diag(T))
    phases[phases <= -np.pi] += 2 * np.pi
    return phases, Z
