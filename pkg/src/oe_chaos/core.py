"""States, coarse-grainings and the observational-entropy functional.

Observational entropy of a pure state with respect to a partition of the
computational basis into macrostates of volume V_i is

    S = -sum_i p_i ln(p_i / V_i),   p_i = sum_{n in cell i} |psi_n|^2.

Everything here is in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

# Probabilities below this are treated as exact zeros before taking logs.
PROB_FLOOR = 1e-300

STATE_NORM_TOL = 1e-10
DIST_SUM_TOL = 1e-9


class ValidationError(ValueError):
    """An input violates a documented invariant."""


@dataclass(frozen=True)
class QuantumState:
    """Pure state as a unit-norm amplitude vector in a named basis."""

    amplitudes: np.ndarray
    basis: str = "position"

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2:
            raise ValidationError(f"state must be a vector of length >= 2, got shape {amps.shape}")
        if self.basis not in ("position", "momentum"):
            raise ValidationError(f"unknown basis tag {self.basis!r}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValidationError(f"state norm^2 is {norm!r}, expected 1 within {STATE_NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def normalized(cls, amplitudes, basis: str = "position") -> "QuantumState":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        return cls(amps / np.linalg.norm(amps), basis)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class CoarseGraining:
    """Partition of ``{0, ..., d-1}`` into disjoint macrostates.

    Uniform partitions keep only ``(d, chi)``; general ones keep a label
    array mapping each basis index to its cell.
    """

    d: int
    chi: int | None = None
    _labels: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.chi is not None:
            if self.chi < 1 or self.d % self.chi:
                raise ValidationError(f"chi={self.chi} does not divide d={self.d}")
            return
        labels = np.asarray(self._labels)
        if labels.shape != (self.d,):
            raise ValidationError("label array must have length d")
        uniq = np.unique(labels)
        if not np.array_equal(uniq, np.arange(uniq.size)):
            raise ValidationError("cell labels must be 0..n_cells-1 with no gaps")
        labels = labels.astype(np.intp)
        labels.setflags(write=False)
        object.__setattr__(self, "_labels", labels)

    @classmethod
    def from_cells(cls, cells: Sequence[Sequence[int]], d: int | None = None) -> "CoarseGraining":
        """Build from explicit index sets; they must be disjoint and cover ``range(d)``."""
        cells = [np.asarray(c, dtype=np.intp).ravel() for c in cells]
        if any(c.size == 0 for c in cells):
            raise ValidationError("every cell needs at least one index (V_i >= 1)")
        total = sum(c.size for c in cells)
        d = total if d is None else d
        labels = np.full(d, -1, dtype=np.intp)
        for k, c in enumerate(cells):
            if c.min() < 0 or c.max() >= d:
                raise ValidationError(f"cell {k} has indices outside 0..{d - 1}")
            if np.any(labels[c] != -1) or np.unique(c).size != c.size:
                raise ValidationError(f"cell {k} overlaps another cell")
            labels[c] = k
        if np.any(labels < 0):
            raise ValidationError("cells do not cover every basis index")
        return cls(d=d, _labels=labels)

    @property
    def is_uniform(self) -> bool:
        return self.chi is not None

    @property
    def n_cells(self) -> int:
        return self.d // self.chi if self.chi else int(self._labels.max()) + 1

    @cached_property
    def labels(self) -> np.ndarray:
        if self.chi is not None:
            return np.arange(self.d) // self.chi
        return self._labels

    @cached_property
    def volumes(self) -> np.ndarray:
        if self.chi is not None:
            return np.full(self.n_cells, float(self.chi))
        return np.bincount(self.labels, minlength=self.n_cells).astype(float)

    @property
    def cells(self) -> list[np.ndarray]:
        if self.chi is not None:
            return [np.arange(k * self.chi, (k + 1) * self.chi) for k in range(self.n_cells)]
        order = np.argsort(self.labels, kind="stable")
        return np.split(order, np.cumsum(self.volumes.astype(int))[:-1])

    def bin(self, weights: np.ndarray) -> np.ndarray:
        """Sum ``weights`` over each cell along the last axis."""
        weights = np.asarray(weights)
        if weights.shape[-1] != self.d:
            raise ValidationError(f"dimension mismatch: got {weights.shape[-1]}, partition has d={self.d}")
        if self.chi is not None:
            return weights.reshape(*weights.shape[:-1], self.n_cells, self.chi).sum(axis=-1)
        flat = weights.reshape(-1, self.d)
        out = np.zeros((flat.shape[0], self.n_cells))
        for row, w in zip(out, flat):
            row[:] = np.bincount(self.labels, weights=w, minlength=self.n_cells)
        return out.reshape(*weights.shape[:-1], self.n_cells)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Macrostate probabilities with the volume attached to each outcome."""

    probabilities: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        v = np.asarray(self.volumes, dtype=float)
        if p.ndim != 1 or p.shape != v.shape:
            raise ValidationError("probabilities and volumes must be 1-D of equal length")
        if np.any(p < 0):
            raise ValidationError(f"negative probability {p.min()!r}")
        if np.any(v <= 0):
            raise ValidationError(f"nonpositive volume {v.min()!r}")
        if abs(p.sum() - 1.0) > DIST_SUM_TOL:
            raise ValidationError(f"probabilities sum to {p.sum()!r}, expected 1")
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "volumes", v)

    def __len__(self):
        return self.probabilities.size


def uniform_partition(d: int, chi: int) -> CoarseGraining:
    """``d/chi`` contiguous cells of size ``chi``; cell k is ``[k*chi, (k+1)*chi)``."""
    if chi < 1 or d < 1 or d % chi:
        raise ValidationError(f"cannot split d={d} into cells of chi={chi}: chi must divide d")
    return CoarseGraining(d=d, chi=chi)


def macrostate_probabilities(state: QuantumState, cg: CoarseGraining) -> OutcomeDistribution:
    if state.dim != cg.d:
        raise ValidationError(f"state has dimension {state.dim} but partition covers {cg.d}")
    p = cg.bin(state.probabilities())
    return OutcomeDistribution(p, cg.volumes)


def entropy_terms(p, volumes, axis: int = -1) -> np.ndarray:
    """Vectorised ``-sum p ln(p/V)`` along ``axis`` with ``0 ln 0 = 0``.

    No validation; callers in hot loops pass already-checked arrays.
    """
    p = np.asarray(p, dtype=float)
    v = np.broadcast_to(np.asarray(volumes, dtype=float), p.shape)
    mask = p > PROB_FLOOR
    safe = np.where(mask, p, 1.0)
    return -np.sum(np.where(mask, p * np.log(safe / v), 0.0), axis=axis)


def observational_entropy(dist: OutcomeDistribution) -> float:
    """Observational entropy in nats.

    >>> observational_entropy(OutcomeDistribution([1.0, 0.0], [2.0, 2.0]))  # doctest: +ELLIPSIS
    0.693147...
    """
    return float(entropy_terms(dist.probabilities, dist.volumes))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(entropy_terms(p, np.ones_like(p)))


def state_entropy(state: QuantumState, cg: CoarseGraining) -> float:
    return observational_entropy(macrostate_probabilities(state, cg))
