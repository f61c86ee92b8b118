"""Hyperbolic geometry of the Poincare unit disk.

Points are complex numbers with modulus < 1. A hyperbolic disk is stored by
its hyperbolic center and hyperbolic radius; the boundary-integral solver works
with the equivalent Euclidean circle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq


class GeometryError(ValueError):
    """Raised for points or disks that violate a geometric precondition."""


class InfeasibleGeometryError(GeometryError):
    pass


def _check_point(z: complex, name: str = "point") -> None:
    if not abs(z) < 1.0:
        raise GeometryError(f"{name} {z!r} is not inside the unit disk")


@dataclass(frozen=True)
class EuclideanCircle:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise GeometryError(f"radius must be positive, got {self.radius}")

    def inside_unit_disk(self) -> bool:
        return abs(self.center) + self.radius < 1.0


@dataclass(frozen=True)
class HyperbolicDisk:
    """Geodesic disk ``{z : rho(center, z) < radius}`` in the unit disk."""

    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        _check_point(self.center, "center")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise GeometryError(f"hyperbolic radius must be positive and finite, got {self.radius}")

    def to_euclidean(self) -> EuclideanCircle:
        return hyp_to_euclidean(self)


@dataclass(frozen=True)
class ConstraintSpec:
    """Feasible region for the disk centers.

    ``kind`` is ``"disk-centers"`` (all centers in ``|z| <= R``) or
    ``"interval-centers"`` (real centers in ``[-R, R]``).  With
    ``whole_disk=True`` the disk kind requires every Euclidean disk to lie
    in ``|z| <= R`` instead of just its center.
    """

    kind: str = "disk-centers"
    R: float = 0.75
    whole_disk: bool = False

    KINDS = ("disk-centers", "interval-centers")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise GeometryError(f"unknown constraint kind {self.kind!r}; expected one of {self.KINDS}")
        if not 0.0 < self.R < 1.0:
            raise GeometryError(f"constraint radius R must lie in (0, 1), got {self.R}")


@dataclass(frozen=True)
class Constellation:
    """Ordered collection of pairwise disjoint hyperbolic disks."""

    disks: tuple[HyperbolicDisk, ...]
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "disks", tuple(self.disks))
        if len(self.disks) < 1:
            raise GeometryError("a constellation needs at least one disk")
        if self.check:
            for i in range(len(self.disks)):
                for j in range(i + 1, len(self.disks)):
                    if not disks_disjoint(self.disks[i], self.disks[j]):
                        raise GeometryError(f"disks {i} and {j} overlap or touch")

    @classmethod
    def from_centers(cls, centers: Iterable[complex], radii: Sequence[float] | float,
                     check: bool = True) -> "Constellation":
        centers = list(centers)
        if np.isscalar(radii):
            radii = [float(radii)] * len(centers)
        if len(radii) != len(centers):
            raise GeometryError("centers and radii differ in length")
        return cls(tuple(HyperbolicDisk(c, r) for c, r in zip(centers, radii)), check=check)

    @property
    def m(self) -> int:
        return len(self.disks)

    @property
    def centers(self) -> np.ndarray:
        return np.array([d.center for d in self.disks], dtype=complex)

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.disks])

    def euclidean_circles(self) -> list[EuclideanCircle]:
        return [hyp_to_euclidean(d) for d in self.disks]

    def adjacent_distances(self, cyclic: bool = True) -> np.ndarray:
        """Hyperbolic distances between consecutive centers in list order."""
        z = self.centers
        pairs = list(zip(z[:-1], z[1:]))
        if cyclic and len(z) > 2:
            pairs.append((z[-1], z[0]))
        return np.array([hyp_distance(a, b) for a, b in pairs])


def hyp_distance(a: complex, b: complex) -> float:
    """Hyperbolic distance in the unit disk, ``2 arsh(|a-b| / sqrt((1-|a|^2)(1-|b|^2)))``."""
    a, b = complex(a), complex(b)
    _check_point(a, "a")
    _check_point(b, "b")
    # 1-|z|^2 written as (1-|z|)(1+|z|) keeps accuracy near the unit circle
    pa = (1.0 - abs(a)) * (1.0 + abs(a))
    pb = (1.0 - abs(b)) * (1.0 + abs(b))
    return 2.0 * math.asinh(abs(a - b) / math.sqrt(pa * pb))


def hyp_distance_grad(a: complex, b: complex) -> tuple[complex, complex]:
    """Gradient of ``hyp_distance`` with respect to ``a`` and ``b``.

    Gradients are packed as complex numbers ``d/dx + i d/dy``.
    """
    d = a - b
    D2 = abs(d) ** 2
    pa = 1.0 - abs(a) ** 2
    pb = 1.0 - abs(b) ** 2
    q = math.sqrt(D2 / (pa * pb))
    drho_dq = 2.0 / math.sqrt(1.0 + q * q)
    ga = q * (d / D2 + a / pa)
    gb = q * (-d / D2 + b / pb)
    return drho_dq * ga, drho_dq * gb


def hyp_to_euclidean(d: HyperbolicDisk) -> EuclideanCircle:
    t = math.tanh(d.radius / 2.0)
    x = d.center
    ax2 = abs(x) ** 2
    den = 1.0 - ax2 * t * t
    return EuclideanCircle(x * (1.0 - t * t) / den, (1.0 - ax2) * t / den)


def euclidean_to_hyp(c: EuclideanCircle) -> HyperbolicDisk:
    """Inverse of :func:`hyp_to_euclidean` for circles strictly inside the unit disk."""
    if not c.inside_unit_disk():
        raise GeometryError(f"circle {c} is not strictly inside the unit disk")
    y, r = c.center, c.radius
    ay = abs(y)
    if ay == 0.0:
        return HyperbolicDisk(0.0, 2.0 * math.atanh(r))
    # The diameter through y meets the circle at ay-r and ay+r; the hyperbolic
    # center is the hyperbolic midpoint of those two points.
    lo = math.atanh(ay - r)
    hi = math.atanh(ay + r)
    radius = hi - lo
    s = math.tanh((hi + lo) / 2.0)
    return HyperbolicDisk(s * y / ay, radius)


def euclidean_to_hyp_numeric(c: EuclideanCircle) -> HyperbolicDisk:
    """Root-solve inversion on ``|x|``; kept as an independent check of the closed form."""
    if not c.inside_unit_disk():
        raise GeometryError(f"circle {c} is not strictly inside the unit disk")
    y, r = c.center, c.radius
    ay = abs(y)
    if ay == 0.0:
        return HyperbolicDisk(0.0, 2.0 * math.atanh(r))

    def t_of(s):
        # radius formula solved for t given |x| = s
        # r (1 - s^2 t^2) = (1 - s^2) t  =>  quadratic in t
        a = r * s * s
        b = 1.0 - s * s
        if a == 0.0:
            return r / b
        return (-b + math.sqrt(b * b + 4.0 * a * r)) / (2.0 * a)

    def resid(s):
        t = t_of(s)
        return s * (1.0 - t * t) / (1.0 - s * s * t * t) - ay

    s = brentq(resid, 0.0, 1.0 - 1e-15, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    t = t_of(s)
    return HyperbolicDisk(s * y / ay, 2.0 * math.atanh(t))


def hyp_area(r: float) -> float:
    return 4.0 * math.pi * math.sinh(r / 2.0) ** 2


def hyp_perimeter(r: float) -> float:
    return 2.0 * math.pi * math.sinh(r)


def min_separation_angle(R: float, r: float) -> float:
    """Half-angle at which disks of hyperbolic radius ``r`` centered at ``R e^{+-i theta}`` touch."""
    arg = (1.0 - R * R) * math.sinh(r) / (2.0 * R)
    if arg > 1.0:
        raise InfeasibleGeometryError(
            f"disks of radius {r} centered on |z|={R} overlap for every angle (arcsin argument {arg:.6g} > 1)")
    return math.asin(arg)


def disks_disjoint(d1: HyperbolicDisk, d2: HyperbolicDisk) -> bool:
    """Closed-disk disjointness; tangent disks count as overlapping."""
    if d1.center == d2.center:
        return False
    return hyp_distance(d1.center, d2.center) > d1.radius + d2.radius


def satisfies_constraint(c: Constellation, spec: ConstraintSpec, tol: float = 1e-12) -> bool:
    """Closed containment test; ``tol`` absorbs rounding of points placed exactly on ``|z| = R``."""
    R = spec.R + tol
    if spec.kind == "interval-centers":
        return all(d.center.imag == 0.0 and abs(d.center.real) <= R for d in c.disks)
    if spec.whole_disk:
        return all(abs(e.center) + e.radius <= R for e in c.euclidean_circles())
    return all(abs(d.center) <= R for d in c.disks)


def rotate(c: Constellation, phi: float) -> Constellation:
    w = cmath.exp(1j * phi)
    return Constellation(tuple(HyperbolicDisk(d.center * w, d.radius) for d in c.disks), check=False)
