"""Closed-form capacities and the special functions behind them.

These are the reference values the boundary-integral solver is checked
against. The complete elliptic integral is evaluated with the
arithmetic-geometric mean rather than the hypergeometric series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ExactCapacity",
    "agm",
    "ellip_K",
    "mu",
    "grotzsch_capacity",
    "annulus_capacity",
    "hyp_disk_capacity",
    "segment_capacity",
    "star_capacity_5",
    "condense_radius",
]

_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class ExactCapacity:
    value: float
    source: str

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"capacity must be positive and finite, got {self.value}")

    def __float__(self):
        return self.value


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two nonnegative numbers."""
    if a < 0 or b < 0:
        raise ValueError("agm needs nonnegative arguments")
    for _ in range(64):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def _complement(r: float) -> float:
    # sqrt(1 - r^2) without cancellation for r close to 1
    return math.sqrt((1.0 - r) * (1.0 + r))


def ellip_K(r: float) -> float:
    """Complete elliptic integral of the first kind with modulus ``r``.

    ``K(r) = int_0^1 dt / sqrt((1 - t^2)(1 - r^2 t^2))``, computed as
    ``pi / (2 agm(1, sqrt(1 - r^2)))``.
    """
    if not 0.0 <= r < 1.0:
        raise ValueError(f"ellip_K is defined for 0 <= r < 1, got {r}")
    return math.pi / (2.0 * agm(1.0, _complement(r)))


def mu(r: float) -> float:
    """Modulus of the Grotzsch ring, ``(pi/2) K(r') / K(r)`` with ``r' = sqrt(1 - r^2)``.

    Written as ``(pi/2) agm(1, r') / agm(1, r)``, which never forms
    ``K`` of a modulus that rounds to 1.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"mu is defined for 0 < r < 1, got {r}")
    if r > _SQRT_HALF:
        return math.pi ** 2 / (4.0 * mu(_complement(r)))
    return 0.5 * math.pi * agm(1.0, _complement(r)) / agm(1.0, r)


def grotzsch_capacity(r: float) -> float:
    """Capacity of the condenser formed by the unit disk and the segment ``[0, r]``."""
    return 2.0 * math.pi / mu(r)


def annulus_capacity(a: float, b: float) -> float:
    if not 0.0 < a < b:
        raise ValueError(f"annulus capacity needs 0 < a < b, got a={a}, b={b}")
    return 2.0 * math.pi / math.log(b / a)


def hyp_disk_capacity(R: float) -> float:
    """Capacity of a hyperbolic disk of radius ``R`` in the unit disk (any center)."""
    if not R > 0:
        raise ValueError(f"hyperbolic radius must be positive, got {R}")
    return 2.0 * math.pi / -math.log(math.tanh(R / 2.0))


def segment_capacity(ell: float) -> float:
    """Capacity of one hyperbolic segment of hyperbolic length ``ell``."""
    if not ell > 0:
        raise ValueError(f"segment length must be positive, got {ell}")
    return 2.0 * math.pi / mu(math.tanh(ell / 2.0))


def star_capacity_5(ell: float) -> float:
    """Capacity of five radial segments of length ``ell`` joined at the origin with equal angles."""
    if not ell > 0:
        raise ValueError(f"segment length must be positive, got {ell}")
    return 10.0 * math.pi / mu(math.tanh(ell / 2.0) ** 5)


def condense_radius(c: float) -> float:
    """Radius of the single hyperbolic disk whose capacity equals ``c``."""
    if not c > 0:
        raise ValueError(f"capacity must be positive, got {c}")
    return 2.0 * math.atanh(math.exp(-2.0 * math.pi / c))
