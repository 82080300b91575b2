"""Observational entropy as a probe of quantum chaos and localization.

Modules: ``core`` (partitions and the entropy functional), ``models``
(kicked rotors, Aubry-Andre chain), ``classical`` (maps and Lyapunov
exponents), ``phasespace`` (coherent states, Husimi, PGM), ``diagnostics``
(sweeps, critical points, slope fits) and ``cli``.
"""

from .core import (
    CoarseGraining,
    OutcomeDistribution,
    QuantumState,
    ValidationError,
    macrostate_probabilities,
    observational_entropy,
    uniform_partition,
)

__version__ = "0.1.0"

__all__ = [
    "CoarseGraining",
    "OutcomeDistribution",
    "QuantumState",
    "ValidationError",
    "macrostate_probabilities",
    "observational_entropy",
    "uniform_partition",
]
