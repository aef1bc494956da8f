"""Randomized block adaptive solvers for linear systems.

Row-action (Kaczmarz family) and column-action (coordinate descent family)
projection solvers sharing one iteration engine, a registry of selection
rules, and tools for certifying their convergence rates through Meany-type
determinant constants.
"""

from .linalg import (
    SpanTracker,
    gram_det,
    make_rng,
    orthonormal_basis,
    pinv_apply,
    random_orthonormal_basis,
    random_span_basis,
)
from .system import (
    InconsistentSystemError,
    LinearSystem,
    Partition,
    SolveTargets,
    load_system,
    make_partition,
    make_targets,
    residual_star,
    save_system,
    solution_projection,
)

__version__ = "0.1.0"

__all__ = [
    "SpanTracker",
    "gram_det",
    "make_rng",
    "orthonormal_basis",
    "pinv_apply",
    "random_orthonormal_basis",
    "random_span_basis",
    "InconsistentSystemError",
    "LinearSystem",
    "Partition",
    "SolveTargets",
    "load_system",
    "make_partition",
    "make_targets",
    "residual_star",
    "save_system",
    "solution_projection",
]
