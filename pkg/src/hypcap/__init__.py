"""Conformal capacity of hyperbolic disk constellations in the unit disk.

The capacity is computed with a boundary integral equation with the
generalized Neumann kernel and maximized over disk positions with a
log-barrier interior method.
"""

from ._version import __version__
from .bie import CapacityResult, capacity
from .geometry import (Constellation, ConstraintSpec, EuclideanCircle, GeometryError, HyperbolicDisk,
                       euclidean_to_hyp, hyp_distance, hyp_to_euclidean)
from .optim import (OptimizationProblem, OptimizationResult, OptimizerOptions, maximize,
                    multistart, objective)
from .specialfn import condense_radius, hyp_disk_capacity, mu

__all__ = [
    "__version__",
    "CapacityResult",
    "capacity",
    "Constellation",
    "ConstraintSpec",
    "EuclideanCircle",
    "GeometryError",
    "HyperbolicDisk",
    "euclidean_to_hyp",
    "hyp_distance",
    "hyp_to_euclidean",
    "OptimizationProblem",
    "OptimizationResult",
    "OptimizerOptions",
    "maximize",
    "multistart",
    "objective",
    "condense_radius",
    "hyp_disk_capacity",
    "mu",
]
