"""Classical kick-then-drift maps and maximal Lyapunov exponents.

Both maps share the form ``p' = p + F(x)``, ``x' = x + p' (mod 2 pi)``, with
tangent map ``[[1 + F'(x), 1], [F'(x), 1]]`` acting on ``(dx, dp)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import SingularKickedRotorParams, skr_force

TWO_PI = 2 * np.pi
REGULAR_THRESHOLD = 1e-3


class DivergenceError(ArithmeticError):
    """Tangent growth overflowed or became non-finite."""


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x) % TWO_PI)
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True)
class StandardMap:
    """Chirikov standard map, the classical limit of the kicked rotor."""

    K: float

    def force(self, x):
        return self.K * np.sin(x)

    def dforce(self, x):
        return self.K * np.cos(x)


@dataclass(frozen=True)
class SingularMap:
    """Classical limit of the singular kicked rotor, force ``-V'(x)``."""

    params: SingularKickedRotorParams

    def force(self, x):
        return skr_force(x, self.params)

    def dforce(self, x):
        # F' = -V''; with s = sqrt(2(1-cos x)+delta^2), s' = sin x / s
        pr = self.params
        s = np.sqrt(2.0 * (1.0 - np.cos(x)) + pr.delta**2)
        ds = np.sin(x) / s
        d2s = np.cos(x) / s - np.sin(x) ** 2 / s**3
        u = s + abs(pr.b)
        v2 = pr.epsilon * pr.alpha * ((pr.alpha - 1.0) * u ** (pr.alpha - 2.0) * ds**2 + u ** (pr.alpha - 1.0) * d2s)
        return -v2


def map_step(cmap, x, p):
    """Vectorised kick-then-drift step on arrays ``x, p``."""
    p_new = p + cmap.force(x)
    return (x + p_new) % TWO_PI, p_new


def jacobian(cmap, x) -> np.ndarray:
    """Tangent map(s) at ``x``; shape ``(..., 2, 2)`` in ``(dx, dp)`` order."""
    f = np.asarray(cmap.dforce(x), dtype=float)
    J = np.empty(f.shape + (2, 2))
    J[..., 0, 0] = 1.0 + f
    J[..., 0, 1] = 1.0
    J[..., 1, 0] = f
    J[..., 1, 1] = 1.0
    return J


def standard_map_step(z: PhasePoint, K: float) -> PhasePoint:
    x, p = map_step(StandardMap(K), z.x, z.p)
    return PhasePoint(x, p)


def singular_map_step(z: PhasePoint, params: SingularKickedRotorParams) -> PhasePoint:
    x, p = map_step(SingularMap(params), z.x, z.p)
    return PhasePoint(x, p)


def _benettin(cmap, x, p, n_steps, n_transient):
    x = np.array(x, dtype=float, ndmin=1)
    p = np.array(p, dtype=float, ndmin=1)
    for _ in range(n_transient):
        x, p = map_step(cmap, x, p)
    dx = np.ones_like(x)
    dp = np.zeros_like(x)
    acc = np.zeros_like(x)
    for _ in range(n_steps):
        f = cmap.dforce(x)
        dx, dp = (1.0 + f) * dx + dp, f * dx + dp
        norm = np.hypot(dx, dp)
        if not np.all(np.isfinite(norm)) or np.any(norm == 0):
            raise DivergenceError("tangent vector norm is not finite")
        acc += np.log(norm)
        dx /= norm
        dp /= norm
        x, p = map_step(cmap, x, p)
    return acc / n_steps


def lyapunov_exponent(cmap, z0: PhasePoint, n_steps: int = 100_000, n_transient: int = 100) -> float:
    """Maximal Lyapunov exponent per kick from tangent-space (Benettin) iteration.

    The tangent vector starts at ``(1, 0)`` and is renormalised every step;
    the Jacobian is evaluated at the pre-kick position.
    """
    if n_steps < 1000:
        raise ValueError(f"n_steps must be >= 1000, got {n_steps}")
    return float(_benettin(cmap, z0.x, z0.p, n_steps, n_transient)[0])


def lyapunov_exponents(cmap, x0, p0, n_steps: int = 100_000, n_transient: int = 100) -> np.ndarray:
    """Per-orbit exponents for arrays of initial points, iterated together."""
    return _benettin(cmap, x0, p0, n_steps, n_transient)


@dataclass(frozen=True)
class EnsembleLyapunov:
    mean: float
    values: np.ndarray
    regular: np.ndarray

    def __float__(self):
        return self.mean


def ensemble_lyapunov(
    cmap,
    n_init: int = 100,
    n_steps: int = 100_000,
    seed: int = 0,
    n_transient: int = 100,
    exclude_regular: bool = True,
) -> EnsembleLyapunov:
    """Chaotic-sea average over ``n_init`` initial points uniform on the unit torus cell.

    Orbits with exponent below 1e-3 are flagged regular and, when
    ``exclude_regular`` is set and any chaotic orbit exists, left out of
    the mean.
    """
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.0, TWO_PI, n_init)
    p0 = rng.uniform(-np.pi, np.pi, n_init)
    vals = lyapunov_exponents(cmap, x0, p0, n_steps, n_transient)
    regular = vals < REGULAR_THRESHOLD
    use = ~regular if exclude_regular and not regular.all() else np.ones_like(regular)
    return EnsembleLyapunov(float(vals[use].mean()), vals, regular)


def divergence_lyapunov(
    cmap,
    z0: PhasePoint,
    n_steps: int = 100_000,
    d0: float = 1e-9,
    window: int = 5,
    n_transient: int = 100,
) -> float:
    """Two-trajectory estimate: grow a ``d0`` separation for ``window`` kicks,
    log the stretch, rescale, repeat.

    Uses only the map itself, never its Jacobian.  ``window`` must keep
    ``d0 * exp(lambda * window)`` far below the phase-space scale.
    """
    x = np.array([z0.x], dtype=float)
    p = np.array([z0.p], dtype=float)
    for _ in range(n_transient):
        x, p = map_step(cmap, x, p)
    xb, pb = x + d0, p.copy()
    total = 0.0
    n_windows = max(1, n_steps // window)
    for _ in range(n_windows):
        for _ in range(window):
            x, p = map_step(cmap, x, p)
            xb, pb = map_step(cmap, xb, pb)
        ddx = (xb - x + np.pi) % TWO_PI - np.pi
        ddp = pb - p
        dist = math.hypot(ddx[0], ddp[0])
        if not math.isfinite(dist) or dist == 0.0:
            raise DivergenceError("trajectory separation collapsed or overflowed")
        total += math.log(dist / d0)
        xb = (x + ddx * (d0 / dist)) % TWO_PI
        pb = p + ddp * (d0 / dist)
    return total / (n_windows * window)
