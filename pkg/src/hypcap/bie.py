"""Capacity of circular condensers in the unit disk by a boundary integral equation.

The domain is the unit disk minus ``m`` disjoint closed disks. Each of the
``m`` integral equations with the generalized Neumann kernel is discretized by
the Nystrom method with the trapezoidal rule on ``n`` equispaced nodes per
boundary circle and solved with GMRES. The piecewise constant functions
``h_k`` then give an ``(m+1) x (m+1)`` linear system for the contributions of
the individual disks.

Orientation: the unit circle is ``eta_0(t) = exp(it)`` (counterclockwise) and
the inner circles are ``eta_j(t) = c_j + r_j exp(-it)`` (clockwise).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .geometry import Constellation, EuclideanCircle, GeometryError, HyperbolicDisk, hyp_to_euclidean
from .krylov import GMRESInfo, gmres

__all__ = [
    "OverlapError",
    "SingularSystemError",
    "DiscretizedBoundary",
    "KernelSystem",
    "CapacityResult",
    "parameterize",
    "choose_alpha",
    "neumann_kernel",
    "apply_M",
    "solve_ie",
    "capacity",
]

GMRES_TOL = 1e-14
SPREAD_WARN = 1e-6
# complex entries per assembly chunk, bounds peak memory of the dense build
_CHUNK = 1 << 21

Geometry = Union[Constellation, Sequence[Union[EuclideanCircle, HyperbolicDisk]]]


class OverlapError(GeometryError):
    """Boundary circles intersect, touch, or leave the unit disk."""


class SingularSystemError(RuntimeError):
    pass


def _as_circles(geom: Geometry) -> list[EuclideanCircle]:
    if isinstance(geom, Constellation):
        return geom.euclidean_circles()
    out = []
    for g in geom:
        if isinstance(g, HyperbolicDisk):
            out.append(hyp_to_euclidean(g))
        elif isinstance(g, EuclideanCircle):
            out.append(g)
        else:
            raise TypeError(f"expected EuclideanCircle or HyperbolicDisk, got {type(g).__name__}")
    if not out:
        raise GeometryError("need at least one inner circle")
    return out


def _gaps(circles: Sequence[EuclideanCircle]) -> list[float]:
    """Euclidean gaps between all pairs of boundary curves, unit circle included."""
    gaps = [1.0 - abs(c.center) - c.radius for c in circles]
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            ci, cj = circles[i], circles[j]
            gaps.append(abs(ci.center - cj.center) - ci.radius - cj.radius)
    return gaps


def _distance_to_boundary(z: complex, circles: Sequence[EuclideanCircle]) -> float:
    """Signed distance from ``z`` to the boundary, positive inside the domain."""
    d = 1.0 - abs(z)
    for c in circles:
        d = min(d, abs(z - c.center) - c.radius)
    return d


def choose_alpha(circles: Sequence[EuclideanCircle]) -> complex:
    """Auxiliary interior point: the origin if it is comfortably inside the domain.

    Otherwise step across the disk that covers (or nearly covers) the origin
    and land half the minimal gap beyond its far side.
    """
    delta = 0.5 * min(_gaps(circles))
    if _distance_to_boundary(0.0, circles) >= delta:
        return 0j
    j = min(range(len(circles)), key=lambda i: abs(circles[i].center) - circles[i].radius)
    c, r = circles[j].center, circles[j].radius
    base = -c / abs(c) if abs(c) > 0 else 1.0 + 0j
    for k in range(16):
        u = base * np.exp(1j * np.pi * k / 8)
        for a in (c + (r + delta) * u, c - (r + delta) * u):
            if _distance_to_boundary(a, circles) >= 0.5 * delta:
                return complex(a)
    # crowded geometry: best point on a coarse grid
    xs = np.linspace(-0.99, 0.99, 199)
    grid = (xs[:, None] + 1j * xs[None, :]).ravel()
    grid = grid[np.abs(grid) < 1]
    return complex(max(grid, key=lambda z: _distance_to_boundary(z, circles)))


@lru_cache(maxsize=16)
def _wittich_correction(n: int) -> np.ndarray:
    """Same-circle correction turning the trapezoidal M-block into the split rule.

    The cotangent part of M is integrated with the alternate-point rule
    (nodes of opposite parity, step 4 pi / n) while the remainder M1 uses the
    plain trapezoidal rule. Added to the trapezoidal M-block, the net effect is
    ``+cot/n`` on same-parity entries and ``-cot/n`` on opposite-parity ones.
    """
    t = 2 * np.pi * np.arange(n) / n
    d = np.subtract.outer(np.arange(n), np.arange(n))
    with np.errstate(divide="ignore"):
        cot = 1.0 / np.tan(np.subtract.outer(t, t) / 2)
    corr = np.where(d % 2 == 1, -cot, cot) / n
    np.fill_diagonal(corr, 0.0)
    corr.setflags(write=False)
    return corr


@dataclass
class DiscretizedBoundary:
    n: int
    circles: list[EuclideanCircle]
    alpha: complex
    t: np.ndarray
    eta: np.ndarray
    etap: np.ndarray
    etapp: np.ndarray
    component_of: np.ndarray
    _ops: tuple | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return len(self.circles)

    @property
    def size(self) -> int:
        return (self.m + 1) * self.n

    @property
    def z(self) -> np.ndarray:
        """Interior points of the inner circles used in the right-hand sides."""
        return np.array([c.center for c in self.circles])

    @property
    def A(self) -> np.ndarray:
        return self.eta - self.alpha

    @property
    def Ap(self) -> np.ndarray:
        return self.etap

    def component(self, j: int) -> slice:
        return slice(j * self.n, (j + 1) * self.n)

    def _diag_limit(self) -> np.ndarray:
        return self.etapp / (2 * self.etap) - self.Ap / self.A

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Nystrom matrices of N and M, quadrature weights included (built once)."""
        if self._ops is None:
            self._ops = self._assemble()
        return self._ops

    def _assemble(self):
        D, n = self.size, self.n
        A, eta, etap = self.A, self.eta, self.etap
        N = np.empty((D, D))
        M = np.empty((D, D))
        dg = self._diag_limit()
        step = max(1, _CHUNK // D)
        for r0 in range(0, D, step):
            rows = slice(r0, min(D, r0 + step))
            idx = np.arange(rows.start, rows.stop)
            with np.errstate(divide="ignore", invalid="ignore"):
                K = (A[rows, None] / A[None, :]) * etap[None, :] / (eta[None, :] - eta[rows, None])
            K[idx - r0, idx] = dg[idx]
            N[rows] = K.imag
            M[rows] = K.real
        N *= 2.0 / n
        M *= 2.0 / n
        corr = _wittich_correction(n)
        for j in range(self.m + 1):
            s = self.component(j)
            M[s, s] += corr
        return N, M


def parameterize(geom: Geometry, n: int, alpha: complex | None = None) -> DiscretizedBoundary:
    """Sample all ``m + 1`` boundary circles at ``n`` equispaced parameters each."""
    if n < 16 or n % 2:
        raise ValueError(f"n must be even and >= 16, got {n}")
    circles = _as_circles(geom)
    for i, c in enumerate(circles):
        if not c.inside_unit_disk():
            raise OverlapError(f"circle {i + 1} meets the unit circle")
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            ci, cj = circles[i], circles[j]
            if abs(ci.center - cj.center) <= ci.radius + cj.radius:
                raise OverlapError(f"circles {i + 1} and {j + 1} intersect or touch")
    if alpha is None:
        alpha = choose_alpha(circles)
    elif _distance_to_boundary(alpha, circles) <= 0:
        raise GeometryError(f"alpha={alpha} is not inside the domain")

    t = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * t)
    ec = e.conj()
    eta = [e] + [c.center + c.radius * ec for c in circles]
    etap = [1j * e] + [-1j * c.radius * ec for c in circles]
    etapp = [-e] + [-c.radius * ec for c in circles]
    comp = np.repeat(np.arange(len(circles) + 1), n)
    return DiscretizedBoundary(n, circles, complex(alpha), t, np.concatenate(eta),
                               np.concatenate(etap), np.concatenate(etapp), comp)


def neumann_kernel(s: int, t: int, db: DiscretizedBoundary) -> float:
    """Generalized Neumann kernel ``N(s, t)`` at two node indices (no quadrature weight)."""
    if s == t:
        return float(db._diag_limit()[s].imag / np.pi)
    A, eta, etap = db.A, db.eta, db.etap
    return float((A[s] / A[t] * etap[t] / (eta[t] - eta[s])).imag / np.pi)


def apply_M(f: np.ndarray, db: DiscretizedBoundary) -> np.ndarray:
    """Apply the discretized operator with kernel ``M`` to boundary samples (1-D or column stack)."""
    return db.matrices()[1] @ f


@dataclass
class KernelSystem:
    k: int
    gamma: np.ndarray
    mu: np.ndarray
    h: np.ndarray
    h_const: np.ndarray  # per-component means of h, length m + 1
    spread: np.ndarray  # per-component max - min of h
    gmres: GMRESInfo


def _solve_many(ks: Sequence[int], db: DiscretizedBoundary, tol: float,
                maxit: int | None) -> list[KernelSystem]:
    for k in ks:
        if not 1 <= k <= db.m:
            raise IndexError(f"disk index {k} outside 1..{db.m}")
    N, M = db.matrices()
    z = db.z[np.asarray(ks) - 1]
    gamma = np.log(np.abs(db.eta[:, None] - z[None, :]))
    if maxit is None:
        maxit = db.m * db.n
    mu, infos = gmres(lambda X: X - N @ X, -(M @ gamma), tol=tol, maxit=maxit)
    h = 0.5 * (M @ mu - (gamma - N @ gamma))
    out = []
    for col, k in enumerate(ks):
        hh = h[:, col].reshape(db.m + 1, db.n)
        spread = np.ptp(hh, axis=1)
        if spread.max() > SPREAD_WARN:
            warnings.warn(f"h_{k} is not piecewise constant (spread {spread.max():.2e}); "
                          f"geometry is nearly singular for n={db.n}", RuntimeWarning, stacklevel=3)
        out.append(KernelSystem(k, gamma[:, col], mu[:, col], h[:, col], hh.mean(axis=1), spread,
                                infos[col]))
    return out


def solve_ie(k: int, db: DiscretizedBoundary, tol: float = GMRES_TOL,
             maxit: int | None = None) -> KernelSystem:
    """Solve the integral equation for disk ``k`` (1-based) and form ``h_k``."""
    return _solve_many([k], db, tol, maxit)[0]


@dataclass
class CapacityResult:
    cap: float
    a: np.ndarray
    b: np.ndarray
    c_const: float
    h: np.ndarray  # (m+1) x m matrix of h_{j,k}
    spread: np.ndarray  # (m+1) x m
    iterations: list[int]
    residuals: list[float]
    n: int
    alpha: complex

    @property
    def m(self) -> int:
        return len(self.a)

    @property
    def max_spread(self) -> float:
        return float(self.spread.max())


def capacity(geom: Geometry | DiscretizedBoundary, n: int = 256, tol: float = GMRES_TOL,
             maxit: int | None = None, alpha: complex | None = None) -> CapacityResult:
    """Conformal capacity ``cap(B^2, E)`` of the unit disk against a union of disks."""
    db = geom if isinstance(geom, DiscretizedBoundary) else parameterize(geom, n, alpha)
    m = db.m
    systems = _solve_many(range(1, m + 1), db, tol, maxit)
    H = np.column_stack([s.h_const for s in systems])
    lhs = np.hstack([H, np.ones((m + 1, 1))])
    rhs = np.ones(m + 1)
    rhs[0] = 0.0
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("the (m+1)x(m+1) system for a_k is singular") from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError("the (m+1)x(m+1) system for a_k is singular")
    a = sol[:m]
    b = 2 * math.pi * a
    return CapacityResult(
        cap=float(b.sum()), a=a, b=b, c_const=float(sol[m]), h=H,
        spread=np.column_stack([s.spread for s in systems]),
        iterations=[s.gmres.iterations for s in systems],
        residuals=[s.gmres.residual for s in systems],
        n=db.n, alpha=db.alpha,
    )
