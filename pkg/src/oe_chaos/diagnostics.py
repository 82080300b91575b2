"""Experiment layer: ensemble OE curves, derivative-based critical points,
Ehrenfest-window slope fits and resolution / shot-noise sweeps.

Sweep points are independent; ``threads > 1`` farms them out to a thread
pool (numpy's FFT and LAPACK release the GIL) and results are gathered in
input order, so outputs do not depend on the thread count.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .classical import REGULAR_THRESHOLD, SingularMap, StandardMap, ensemble_lyapunov
from .core import ValidationError, entropy_terms
from .models import (
    AubryAndreParams,
    KickedRotorParams,
    SingularKickedRotorParams,
    aa_diagonals,
    build_propagator,
    check_leakage,
    floquet_states,
    step_array,
    to_momentum,
    tridiagonal_eigensystem,
)
from .phasespace import POVM, CoherentStateGrid, block_cells, coherent_state, pgm_povm, pgm_probability_array, sample_counts

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
LOG_SPACING_TOL = 1e-9
R2_LINEAR = 0.9
OE_BOUND_TOL = 1e-9


class PeakError(ValidationError):
    """No interior maximum: the derivative peaks on the sweep boundary or is flat."""


class WindowError(ArithmeticError):
    """Ehrenfest fit window shorter than three kicks."""


# ---------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class OECurve:
    """Mean observational entropy (with standard error) against a parameter or time."""

    parameter: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.parameter, dtype=float)
        m = np.asarray(self.mean, dtype=float)
        se = np.asarray(self.stderr, dtype=float)
        if x.ndim != 1 or m.shape != x.shape or se.shape != x.shape:
            raise ValidationError("parameter, mean and stderr must be 1-D of equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValidationError("parameter values must be strictly increasing")
        d = self.meta.get("d")
        if d is not None and (np.any(m < -OE_BOUND_TOL) or np.any(m > math.log(d) + OE_BOUND_TOL)):
            raise ValidationError(f"mean OE outside [0, ln d={d}]")
        for a in (x, m, se):
            a.setflags(write=False)
        object.__setattr__(self, "parameter", x)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "stderr", se)


@dataclass(frozen=True)
class DerivativeCurve:
    """Finite-difference derivative of an :class:`OECurve` at its interior points.

    ``log_axis`` records that the derivative was taken in ``log(parameter)``;
    peak refinement then works in that coordinate.
    """

    parameter: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    order: int
    log_axis: bool = False
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CriticalEstimate:
    location: float
    derivative_order: int
    peak_height: float
    chi: int | None = None
    N: int | None = None
    uncertainty: float = float("nan")


@dataclass(frozen=True)
class LyapunovEstimate:
    slope: float
    t_lo: int
    t_hi: int
    coarse_graining: str
    r_squared: float
    slope_stderr: float = float("nan")

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValidationError(f"fit window needs t_lo < t_hi, got [{self.t_lo}, {self.t_hi}]")

    @property
    def linear_regime(self) -> bool:
        return self.r_squared >= R2_LINEAR


# ---------------------------------------------------------------------------
# ensembles and observers


@dataclass(frozen=True)
class QuasimomentumEnsemble:
    """One coherent start state, ``n_members`` random quasimomenta beta in [0, 1)."""

    n_members: int = 100
    seed: int = 0
    q0: float = 0.0
    p0: float = 0.0

    def betas(self) -> np.ndarray:
        return np.random.default_rng(self.seed).random(self.n_members)

    def initial_states(self, d: int, hbar_eff: float) -> np.ndarray:
        psi = coherent_state(self.q0, self.p0, math.sqrt(hbar_eff / 2), d, hbar_eff).amplitudes
        return np.tile(psi, (self.n_members, 1))


@dataclass(frozen=True)
class CoherentEnsemble:
    """Coherent states with ``q0`` uniform on the circle and fixed ``p0``, at beta = 0."""

    n_members: int = 100
    seed: int = 0
    p0: float = 0.0

    def betas(self) -> None:
        return None

    def centers(self) -> np.ndarray:
        return np.random.default_rng(self.seed).uniform(0.0, TWO_PI, self.n_members)

    def initial_states(self, d: int, hbar_eff: float) -> np.ndarray:
        sigma = math.sqrt(hbar_eff / 2)
        return np.stack([coherent_state(q, self.p0, sigma, d, hbar_eff).amplitudes for q in self.centers()])


@dataclass(frozen=True)
class MomentumOE:
    """Uniform momentum bins of ``chi`` consecutive momenta."""

    chi: int

    @property
    def label(self) -> str:
        return f"momentum chi={self.chi}"

    def volumes(self, d: int) -> float:
        return float(self.chi)

    def probabilities(self, psi: np.ndarray, cache: dict) -> np.ndarray:
        if "mom" not in cache:
            cache["mom"] = np.abs(to_momentum(psi)) ** 2
        pm = cache["mom"]
        d = pm.shape[-1]
        if d % self.chi:
            raise ValidationError(f"chi={self.chi} does not divide d={d}")
        return pm.reshape(*pm.shape[:-1], d // self.chi, self.chi).sum(axis=-1)


@dataclass(frozen=True)
class HusimiOE:
    """PGM-Husimi cells: the POVM's fine grid merged into ``n_cells`` blocks."""

    povm: POVM
    n_cells: int

    def __post_init__(self):
        g = self.povm.grid
        if g is None:
            raise ValidationError("HusimiOE needs a grid-based POVM")
        nq, npp = coarse_shape(self.n_cells)
        if g.n_q % nq or g.n_p % npp:
            raise ValidationError(f"{self.n_cells} cells do not tile the {g.n_q}x{g.n_p} fine grid")

    @property
    def label(self) -> str:
        return f"pgm-husimi cells={self.n_cells}"

    def volumes(self, d: int) -> float:
        return d / self.n_cells

    def probabilities(self, psi: np.ndarray, cache: dict) -> np.ndarray:
        key = ("pgm", id(self.povm))
        if key not in cache:
            cache[key] = pgm_probability_array(psi, self.povm)
        g = self.povm.grid
        nq, npp = coarse_shape(self.n_cells)
        return block_cells(cache[key], g.n_q, g.n_p, nq, npp)


def coarse_shape(n_cells: int) -> tuple[int, int]:
    """``(n_q, n_p)`` for a power-of-two cell count; odd powers get ``n_q = 2 n_p``."""
    if n_cells < 1 or n_cells & (n_cells - 1):
        raise ValidationError(f"n_cells must be a power of two, got {n_cells}")
    k = n_cells.bit_length() - 1
    n_p = 1 << (k // 2)
    return n_cells // n_p, n_p


@lru_cache(maxsize=4)
def fine_pgm(d: int, fine_cells: int | None = None) -> POVM:
    """PGM on an overcomplete coherent-state grid (``4 d`` states by default).

    Coarser Husimi partitions are obtained by summing blocks of its outcomes,
    which keeps the measurement complete even when ``n_cells < d``.
    """
    fine_cells = 4 * d if fine_cells is None else fine_cells
    nq, npp = coarse_shape(fine_cells)
    grid = CoherentStateGrid(nq, npp, d, TWO_PI / d)
    return pgm_povm(grid)


# ---------------------------------------------------------------------------
# dynamics


def _parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def probability_traces(params, n_kicks: int, observers: Sequence, ensemble, times: Iterable[int] | None = None):
    """Yield ``(t, [probabilities per observer])`` for ``t = 0..n_kicks``.

    ``times`` restricts which kicks are observed.  Off-torus grids are
    checked for momentum-window leakage after every kick.
    """
    if n_kicks < 0:
        raise ValidationError("n_kicks must be >= 0")
    prop = build_propagator(params, ensemble.betas())
    psi = ensemble.initial_states(params.d, params.hbar_eff)
    wanted = None if times is None else set(int(t) for t in times)
    for t in range(n_kicks + 1):
        if t:
            psi = step_array(psi, prop)
            if not prop.is_torus:
                check_leakage(np.abs(to_momentum(psi)) ** 2)
        if wanted is None or t in wanted:
            cache: dict = {}
            yield t, [obs.probabilities(psi, cache) for obs in observers]


def oe_traces(params, n_kicks: int, observers: Sequence, ensemble, times=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-member OE; returns ``(times, S)`` with ``S.shape = (n_obs, n_times, n_members)``."""
    ts, rows = [], []
    for t, probs in probability_traces(params, n_kicks, observers, ensemble, times):
        ts.append(t)
        rows.append([entropy_terms(p, obs.volumes(params.d)) for p, obs in zip(probs, observers)])
    return np.array(ts), np.moveaxis(np.array(rows), 0, 1)


def _mean_se(samples: np.ndarray, axis: int = -1):
    n = samples.shape[axis]
    mean = samples.mean(axis=axis)
    se = samples.std(axis=axis, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    return mean, se


def dynamical_oe_curve(params, n_kicks: int, observer, ensemble=None) -> OECurve:
    """Ensemble-mean OE against kick number for one coarse-graining."""
    if ensemble is None:
        ensemble = CoherentEnsemble() if isinstance(observer, HusimiOE) else QuasimomentumEnsemble()
    t, S = oe_traces(params, n_kicks, [observer], ensemble)
    mean, se = _mean_se(S[0])
    meta = {"d": params.d, "coarse_graining": observer.label, "n_members": ensemble.n_members}
    return OECurve(t.astype(float), mean, se, meta)


def kr_dynamic_sweep(
    K_values: Sequence[float],
    chis: Sequence[int],
    d: int = 1024,
    hbar_eff: float | None = None,
    n_kicks: int = 2000,
    ensemble: QuasimomentumEnsemble = QuasimomentumEnsemble(),
    avg_fraction: float = 0.25,
    threads: int = 1,
) -> dict[int, OECurve]:
    """Long-time momentum OE against K, averaged over the final ``avg_fraction`` of kicks.

    Every K uses the same quasimomentum draws, so the curves are smooth in K.
    """
    if not 0 < avg_fraction <= 1:
        raise ValidationError("avg_fraction must lie in (0, 1]")
    t_start = n_kicks - max(1, int(round(avg_fraction * n_kicks))) + 1
    observers = [MomentumOE(c) for c in chis]

    def point(K):
        params = KickedRotorParams(K, d, hbar_eff)
        _, S = oe_traces(params, n_kicks, observers, ensemble, range(t_start, n_kicks + 1))
        return S.mean(axis=1)  # (n_chi, n_members)

    per_K = np.array(_parallel_map(point, list(K_values), threads))  # (n_K, n_chi, n_members)
    out = {}
    for j, c in enumerate(chis):
        mean, se = _mean_se(per_K[:, j, :])
        out[c] = OECurve(K_values, mean, se, {"d": d, "chi": c, "n_members": ensemble.n_members, "basis": "momentum", "mode": "dynamic"})
    return out


def kr_stationary_sweep(
    K_values: Sequence[float],
    chis: Sequence[int],
    d: int = 1024,
    hbar_eff: float | None = None,
    n_beta: int = 4,
    seed: int = 0,
    threads: int = 1,
) -> dict[int, OECurve]:
    """Momentum OE averaged over all Floquet states and ``n_beta`` quasimomenta."""
    betas = np.random.default_rng(seed).random(n_beta)

    def point(K):
        vals = []
        for b in betas:
            params = KickedRotorParams(K, d, hbar_eff, beta=float(b))
            _, Z = floquet_states(build_propagator(params))
            pm = np.abs(to_momentum(Z.T)) ** 2
            vals.append([entropy_terms(pm.reshape(d, d // c, c).sum(-1), c).mean() for c in chis])
        return np.array(vals).T  # (n_chi, n_beta)

    per_K = np.array(_parallel_map(point, list(K_values), threads))
    out = {}
    for j, c in enumerate(chis):
        mean, se = _mean_se(per_K[:, j, :])
        out[c] = OECurve(K_values, mean, se, {"d": d, "chi": c, "n_members": n_beta, "basis": "momentum", "mode": "stationary"})
    return out


def aa_sweep(
    lam_values: Sequence[float],
    chis: Sequence[int],
    N: int = 1024,
    n_phi: int = 100,
    seed: int = 0,
    J: float = 1.0,
    n_times: int = 25,
    horizon: float | None = None,
    threads: int = 1,
    modes: Sequence[str] = ("eigen", "dynamic"),
) -> dict[str, dict[int, OECurve]]:
    """Position-space OE of the Aubry-Andre chain for both averaging modes.

    ``eigen``: mean over all eigenstates.  ``dynamic``: a particle started
    on the central site, OE averaged over ``n_times`` instants in the final
    quarter of ``[0, horizon]`` (default ``horizon = 4 N / J``).  One
    diagonalisation per (lambda, phi) serves both; ``modes`` limits the work.
    """
    if not set(modes) <= {"eigen", "dynamic"} or not modes:
        raise ValidationError(f"modes must be drawn from ('eigen', 'dynamic'), got {modes!r}")
    want_dyn = "dynamic" in modes
    for c in chis:
        if N % c:
            raise ValidationError(f"chi={c} does not divide N={N}")
    phis = np.random.default_rng(seed).uniform(0.0, TWO_PI, n_phi)
    horizon = 4 * N / J if horizon is None else horizon
    times = np.linspace(0.75 * horizon, horizon, n_times)
    site = N // 2

    def point(lam):
        eig = np.empty((len(chis), n_phi))
        dyn = np.empty((len(chis), n_phi))
        for k, phi in enumerate(phis):
            E, V = tridiagonal_eigensystem(*aa_diagonals(AubryAndreParams(lam, N, J, phi)))
            P_eig = V**2
            if want_dyn:
                psi_t = V @ (V[site][:, None] * np.exp(-1j * np.outer(E, times)))
                P_dyn = np.abs(psi_t) ** 2
            for j, c in enumerate(chis):
                eig[j, k] = entropy_terms(P_eig.reshape(N // c, c, N).sum(1), c, axis=0).mean()
                if want_dyn:
                    dyn[j, k] = entropy_terms(P_dyn.reshape(N // c, c, n_times).sum(1), c, axis=0).mean()
        return eig, dyn

    results = _parallel_map(point, list(lam_values), threads)
    out: dict[str, dict[int, OECurve]] = {m: {} for m in modes}
    for m, mode in enumerate(("eigen", "dynamic")):
        if mode not in out:
            continue
        arr = np.array([r[m] for r in results])  # (n_lam, n_chi, n_phi)
        for j, c in enumerate(chis):
            mean, se = _mean_se(arr[:, j, :])
            out[mode][c] = OECurve(lam_values, mean, se, {"d": N, "chi": c, "n_members": n_phi, "basis": "position", "mode": mode})
    return out


def stationary_oe_average(params, chi: int, n_members: int = 4, seed: int = 0) -> float:
    """Mean OE over all eigenstates (AA, random phi) or Floquet states (KR/SKR, random beta)."""
    rng = np.random.default_rng(seed)
    vals = []
    if isinstance(params, AubryAndreParams):
        if params.N % chi:
            raise ValidationError(f"chi={chi} does not divide N={params.N}")
        for phi in rng.uniform(0.0, TWO_PI, n_members):
            p = AubryAndreParams(params.lam, params.N, params.J, float(phi), params.beta_irr)
            _, V = tridiagonal_eigensystem(*aa_diagonals(p))
            vals.append(entropy_terms((V**2).reshape(p.N // chi, chi, p.N).sum(1), chi, axis=0).mean())
        return float(np.mean(vals))
    if params.d % chi:
        raise ValidationError(f"chi={chi} does not divide d={params.d}")
    for beta in rng.random(n_members):
        _, Z = floquet_states(build_propagator(params, np.asarray(beta)))
        pm = np.abs(to_momentum(Z.T)) ** 2
        vals.append(entropy_terms(pm.reshape(params.d, params.d // chi, chi).sum(-1), chi).mean())
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# derivatives and peaks


def entropy_curvature(curve: OECurve) -> DerivativeCurve:
    """Second central difference of the mean OE in ``log(parameter)``; endpoints dropped."""
    x = curve.parameter
    if x.size < 5:
        raise ValidationError("curvature needs at least 5 samples")
    if np.any(x <= 0):
        raise ValidationError("log-spaced sweep needs positive parameters")
    u = np.log(x)
    h = np.diff(u)
    if np.max(np.abs(h - h.mean())) > LOG_SPACING_TOL:
        raise ValidationError("parameters are not uniformly spaced in log")
    h = h.mean()
    S, se = curve.mean, curve.stderr
    vals = (S[2:] - 2 * S[1:-1] + S[:-2]) / h**2
    err = np.sqrt(se[2:] ** 2 + 4 * se[1:-1] ** 2 + se[:-2] ** 2) / h**2
    return DerivativeCurve(x[1:-1], vals, err, 2, True, dict(curve.meta))


def entropy_susceptibility(curve: OECurve) -> DerivativeCurve:
    """``-dS/dparameter`` by central differences; endpoints dropped."""
    x = curve.parameter
    if x.size < 3:
        raise ValidationError("susceptibility needs at least 3 samples")
    S, se = curve.mean, curve.stderr
    span = x[2:] - x[:-2]
    vals = -(S[2:] - S[:-2]) / span
    err = np.sqrt(se[2:] ** 2 + se[:-2] ** 2) / span
    return DerivativeCurve(x[1:-1], vals, err, 1, False, dict(curve.meta))


def _vertex(u, y):
    """Abscissa of the parabola through three points."""
    (u0, u1, u2), (y0, y1, y2) = u, y
    num = (u1 - u0) ** 2 * (y1 - y2) - (u1 - u2) ** 2 * (y1 - y0)
    den = (u1 - u0) * (y1 - y2) - (u1 - u2) * (y1 - y0)
    return u1 - 0.5 * num / den if den != 0 else u1


def locate_critical_point(deriv: DerivativeCurve, chi: int | None = None, N: int | None = None) -> CriticalEstimate:
    """Global maximum, refined by a three-point parabola.

    Ties go to the smaller parameter; a maximum on either end of the curve
    (or a flat curve) raises :class:`PeakError`.
    """
    y = np.asarray(deriv.values, dtype=float)
    if y.size < 3:
        raise PeakError("need at least 3 derivative samples")
    scale = max(1.0, float(np.max(np.abs(y))))
    if np.ptp(y) <= 1e-9 * scale:
        raise PeakError("derivative is flat: no peak")
    i = int(np.argmax(y))
    if i == 0 or i == y.size - 1:
        raise PeakError(f"maximum lies on the sweep boundary at {deriv.parameter[i]:.6g}")
    u = np.log(deriv.parameter) if deriv.log_axis else np.asarray(deriv.parameter, dtype=float)
    uu, yy = u[i - 1 : i + 2], y[i - 1 : i + 2]
    v = _vertex(uu, yy)
    v = min(max(v, uu[0]), uu[2])
    # vertex sensitivity to each of the three ordinates, combined with grid resolution
    se = np.asarray(deriv.stderr, dtype=float)[i - 1 : i + 2]
    grad = []
    for k in range(3):
        dy = np.zeros(3)
        dy[k] = 1e-6 * scale
        grad.append((_vertex(uu, yy + dy) - _vertex(uu, yy - dy)) / (2e-6 * scale))
    fit_var = float(np.sum((np.array(grad) * np.nan_to_num(se)) ** 2))
    half_step = 0.5 * (uu[2] - uu[0]) / 2
    unc_u = math.sqrt(half_step**2 + fit_var)
    loc = math.exp(v) if deriv.log_axis else v
    unc = loc * unc_u if deriv.log_axis else unc_u
    return CriticalEstimate(float(loc), deriv.order, float(y[i]), chi, N, float(unc))


def critical_point_vs_resolution(curves: dict[int, OECurve], order: int) -> list[CriticalEstimate]:
    """Critical estimate per coarse-graining from pre-computed sweep curves."""
    out = []
    for chi in sorted(curves):
        c = curves[chi]
        deriv = entropy_curvature(c) if order == 2 else entropy_susceptibility(c)
        out.append(locate_critical_point(deriv, chi=chi, N=c.meta.get("d")))
    return out


# ---------------------------------------------------------------------------
# Lyapunov slopes


def ehrenfest_time(lambda_cl: float, hbar_eff: float, sigma_cl: float = TWO_PI) -> float:
    if not lambda_cl > 0:
        raise ValidationError(f"lambda_cl must be > 0, got {lambda_cl}")
    return math.log(sigma_cl / math.sqrt(hbar_eff)) / lambda_cl


def ehrenfest_window(lambda_cl: float, hbar_eff: float, sigma_cl: float = TWO_PI, t_mix: int = 1) -> tuple[int, int]:
    """``[t_mix, floor(t_E)]``; at least three kicks or :class:`WindowError`."""
    t_e = ehrenfest_time(lambda_cl, hbar_eff, sigma_cl) if math.isfinite(lambda_cl) else 0.0
    t_hi = int(math.floor(t_e)) if t_e > 0 else 0
    if t_hi < t_mix + 2:
        raise WindowError(
            f"Ehrenfest window [{t_mix}, {t_hi}] (t_E={t_e:.3g}) holds fewer than 3 kicks; use a smaller hbar_eff"
        )
    return t_mix, t_hi


def auto_window(curve: OECurve, rel_tol: float = 0.1) -> tuple[int, int]:
    """Longest stretch whose per-step slopes all lie within ``rel_tol`` of their median.

    For use when no classical exponent is available; earliest stretch wins ties.
    """
    t = curve.parameter
    s = np.diff(curve.mean) / np.diff(t)
    best = None
    for a in range(s.size):
        for b in range(a + 2, s.size + 1):  # slopes a..b-1, points a..b
            seg = s[a:b]
            med = np.median(seg)
            if med > 0 and np.all(np.abs(seg - med) <= rel_tol * med):
                if best is None or b - a > best[1] - best[0]:
                    best = (a, b)
    if best is None:
        raise WindowError("no interval of at least 3 points with a consistent positive slope")
    return int(t[best[0]]), int(t[best[1]])


def fit_lyapunov_slope(curve: OECurve, window: tuple[int, int], coarse_graining: str | None = None) -> LyapunovEstimate:
    """OLS slope of mean OE against time inside ``[t_lo, t_hi]``."""
    t_lo, t_hi = window
    t = curve.parameter
    if t_lo < t[0] or t_hi > t[-1]:
        raise ValidationError(f"window [{t_lo}, {t_hi}] exceeds simulated times [{t[0]:g}, {t[-1]:g}]")
    sel = (t >= t_lo) & (t <= t_hi)
    x, y = t[sel], curve.mean[sel]
    if x.size < 2:
        raise ValidationError("window holds fewer than 2 samples")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - (ym + slope * (x - xm))
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    scale = max(1.0, float(np.max(np.abs(y))))
    r2 = 1.0 if ss_res <= (1e-12 * scale) ** 2 * x.size else (1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
    se = math.sqrt(ss_res / (x.size - 2) / sxx) if x.size > 2 else float("nan")
    label = coarse_graining or curve.meta.get("coarse_graining", "")
    return LyapunovEstimate(slope, int(t_lo), int(t_hi), label, r2, se)


@dataclass(frozen=True)
class LyapunovSetup:
    """Shared settings for OE-slope experiments on rotor models.

    The Husimi side uses :func:`fine_pgm` at this ``d``; coarse partitions are
    block sums of it.
    """

    d: int = 4096
    n_members: int = 100
    seed: int = 0
    sigma_cl: float = TWO_PI
    t_mix: int = 1
    max_kicks: int = 12
    fine_cells: int | None = None
    classical_steps: int = 20_000
    classical_init: int = 100

    @property
    def hbar_eff(self) -> float:
        return TWO_PI / self.d

    def povm(self) -> POVM:
        return fine_pgm(self.d, self.fine_cells)

    def ensemble(self) -> CoherentEnsemble:
        return CoherentEnsemble(self.n_members, self.seed)

    def window(self, lambda_cl: float) -> tuple[int, int]:
        """Ehrenfest window, capped at ``max_kicks`` for weakly chaotic points."""
        if lambda_cl < REGULAR_THRESHOLD:
            return self.t_mix, self.max_kicks
        t_lo, t_hi = ehrenfest_window(lambda_cl, self.hbar_eff, self.sigma_cl, self.t_mix)
        return t_lo, min(t_hi, self.max_kicks)


def classical_exponent(params, setup: LyapunovSetup) -> float:
    cmap = StandardMap(params.K) if isinstance(params, KickedRotorParams) else SingularMap(params)
    return ensemble_lyapunov(cmap, setup.classical_init, setup.classical_steps, setup.seed).mean


def _curves_for(params, setup: LyapunovSetup, observers, n_kicks):
    t, S = oe_traces(params, n_kicks, observers, setup.ensemble())
    curves = []
    for obs, s in zip(observers, S):
        mean, se = _mean_se(s)
        curves.append(OECurve(t.astype(float), mean, se, {"d": params.d, "coarse_graining": obs.label}))
    return curves


def lyapunov_point(params, setup: LyapunovSetup, n_cells: int = 256, lambda_cl: float | None = None) -> dict:
    """PGM and momentum OE slopes at one parameter point, plus the classical exponent.

    The momentum partition has the same number of cells (``chi = d / n_cells``).
    """
    if params.d != setup.d:
        raise ValidationError(f"model d={params.d} differs from setup d={setup.d}")
    lam = classical_exponent(params, setup) if lambda_cl is None else lambda_cl
    window = setup.window(lam)
    observers = [HusimiOE(setup.povm(), n_cells), MomentumOE(setup.d // n_cells)]
    pgm, mom = _curves_for(params, setup, observers, window[1])
    f_pgm, f_mom = fit_lyapunov_slope(pgm, window), fit_lyapunov_slope(mom, window)
    return {
        "lambda_cl": lam,
        "t_lo": window[0],
        "t_hi": window[1],
        "lambda_pgm": f_pgm.slope,
        "r2_pgm": f_pgm.r_squared,
        "se_pgm": f_pgm.slope_stderr,
        "lambda_mom": f_mom.slope,
        "r2_mom": f_mom.r_squared,
        "se_mom": f_mom.slope_stderr,
        "linear_pgm": f_pgm.linear_regime,
    }


def lyapunov_vs_parameter(model: str, values: Sequence[float], setup: LyapunovSetup, n_cells: int = 256, threads: int = 1, **fixed) -> list[dict]:
    """Rows of ``lyapunov_point`` over K (``model='kr'``) or b (``model='skr'``).

    ``fixed`` carries the remaining SKR parameters (``epsilon``, ``alpha``).
    """
    def params_for(v):
        if model == "kr":
            return KickedRotorParams(float(v), setup.d)
        if model == "skr":
            return SingularKickedRotorParams(fixed["epsilon"], fixed["alpha"], float(v), d=setup.d)
        raise ValidationError(f"unknown model {model!r}")

    setup.povm()  # build once before threads fan out
    rows = _parallel_map(lambda v: {"parameter": float(v), **lyapunov_point(params_for(v), setup, n_cells)}, list(values), threads)
    return rows


def lyapunov_vs_resolution(params, n_cells_list: Sequence[int], setup: LyapunovSetup, lambda_cl: float | None = None) -> list[dict]:
    """PGM and momentum slopes per cell count, from one shared time evolution."""
    lam = classical_exponent(params, setup) if lambda_cl is None else lambda_cl
    window = setup.window(lam)
    povm = setup.povm()
    observers = []
    for n in n_cells_list:
        observers += [HusimiOE(povm, n), MomentumOE(setup.d // n)]
    curves = _curves_for(params, setup, observers, window[1])
    rows = []
    for k, n in enumerate(n_cells_list):
        fp = fit_lyapunov_slope(curves[2 * k], window)
        fm = fit_lyapunov_slope(curves[2 * k + 1], window)
        rows.append({
            "n_cells": n, "lambda_cl": lam, "t_lo": window[0], "t_hi": window[1],
            "lambda_pgm": fp.slope, "r2_pgm": fp.r_squared, "lambda_mom": fm.slope, "r2_mom": fm.r_squared,
        })
    return rows


def sampled_entropy(probs: np.ndarray, volume: float, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    """Plug-in OE of multinomial frequencies drawn from each row of ``probs``."""
    counts = sample_counts(probs, n_shots, rng)
    return entropy_terms(counts / n_shots, volume)


def shot_noise_sweep(
    params,
    n_cells_list: Sequence[int],
    n_shots_list: Sequence[int],
    setup: LyapunovSetup,
    seed: int = 0,
    lambda_cl: float | None = None,
) -> list[dict]:
    """Slopes from finite-shot Husimi histograms next to the exact-probability slope.

    Each (n_cells, n_shots, t) draw uses its own generator seeded from
    ``(seed, n_cells, n_shots, t)``.  Rows with ``n_shots = 0`` are exact.
    """
    lam = classical_exponent(params, setup) if lambda_cl is None else lambda_cl
    window = setup.window(lam)
    povm = setup.povm()
    observers = [HusimiOE(povm, n) for n in n_cells_list]
    ts, exact, sampled = [], [], []
    for t, probs in probability_traces(params, window[1], observers, setup.ensemble()):
        ts.append(t)
        exact.append([entropy_terms(p, obs.volumes(params.d)) for p, obs in zip(probs, observers)])
        row = []
        for p, obs in zip(probs, observers):
            row.append([
                sampled_entropy(p, obs.volumes(params.d), n_s, np.random.default_rng([seed, obs.n_cells, n_s, t]))
                for n_s in n_shots_list
            ])
        sampled.append(row)
    ts = np.array(ts, dtype=float)
    exact = np.array(exact)  # (T, n_cells, members)
    sampled = np.array(sampled)  # (T, n_cells, n_shots, members)
    rows = []
    for j, n in enumerate(n_cells_list):
        runs = [(0, exact[:, j, :])] + [(n_s, sampled[:, j, k, :]) for k, n_s in enumerate(n_shots_list)]
        ref = None
        for n_s, S in runs:
            mean, se = _mean_se(S)
            fit = fit_lyapunov_slope(OECurve(ts, mean, se, {"d": params.d}), window, f"pgm-husimi cells={n}")
            ref = fit.slope if n_s == 0 else ref
            rows.append({
                "n_cells": n, "n_shots": n_s, "t_lo": window[0], "t_hi": window[1], "slope": fit.slope,
                "r2": fit.r_squared, "rel_dev": abs(fit.slope - ref) / abs(ref) if ref else float("nan"),
                "oe_bias_t_hi": float(mean[-1] - exact[-1, j, :].mean()),
            })
    return rows


# ---------------------------------------------------------------------------
# export


def write_csv(path, columns: Sequence[str], rows: Sequence[dict], header: dict | None = None) -> None:
    """UTF-8 CSV with ``# key: value`` metadata lines ahead of the column row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def curve_rows(curves: dict[int, OECurve]) -> list[dict]:
    rows = []
    for chi in sorted(curves):
        c = curves[chi]
        for x, m, s in zip(c.parameter, c.mean, c.stderr):
            rows.append({"chi": chi, "parameter": x, "mean_oe": m, "stderr": s})
    return rows
