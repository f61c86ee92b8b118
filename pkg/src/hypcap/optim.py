"""Constrained maximization of the capacity over disk centers.

The hyperbolic radii stay fixed and only the centers move. Inequality
constraints (pairwise disjointness with a small margin, containment of the
centers) are handled by a logarithmic barrier. Each barrier subproblem is
minimized by a quasi-Newton method: the barrier Hessian is formed exactly
and the (indefinite) Hessian of the capacity is approximated by
symmetric rank-one updates. Capacity gradients come from central
differences.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, nnls

from .bie import GMRES_TOL, OverlapError, SingularSystemError, capacity
from .geometry import (Constellation, ConstraintSpec, GeometryError, HyperbolicDisk,
                       hyp_distance, hyp_distance_grad, hyp_to_euclidean)
from .krylov import GMRESError

__all__ = [
    "OptimizationProblem",
    "OptimizerOptions",
    "TraceEntry",
    "OptimizationResult",
    "InfeasibleStartError",
    "objective",
    "numerical_gradient",
    "constraint_values",
    "random_start",
    "maximize",
    "multistart",
    "dedupe",
]

MARGIN = 1e-6
START_GAP = 0.05  # minimal hyperbolic gap between disks in random starts


class InfeasibleStartError(GeometryError):
    pass


@dataclass(frozen=True)
class OptimizationProblem:
    radii: tuple[float, ...]
    constraint: ConstraintSpec = ConstraintSpec()
    symmetry_pin: bool = True
    n_solver: int = 64
    n_polish: int = 256
    margin: float = MARGIN

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if len(self.radii) < 1:
            raise ValueError("need at least one disk")
        if any(r <= 0 for r in self.radii):
            raise ValueError("hyperbolic radii must be positive")

    @property
    def m(self) -> int:
        return len(self.radii)

    @property
    def interval(self) -> bool:
        return self.constraint.kind == "interval-centers"

    @property
    def pinned(self) -> bool:
        return self.symmetry_pin and not self.interval and self.m > 0

    # packing of centers into the free optimization variables
    def to_vars(self, centers) -> np.ndarray:
        z = np.asarray(centers, dtype=complex)
        if self.interval:
            return z.real.copy()
        x = np.column_stack([z.real, z.imag]).ravel()
        return np.delete(x, 1) if self.pinned else x

    def to_centers(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.interval:
            return x.astype(complex)
        if self.pinned:
            x = np.insert(x, 1, 0.0)
        return x[0::2] + 1j * x[1::2]

    def constellation(self, centers, check: bool = False) -> Constellation:
        return Constellation(tuple(HyperbolicDisk(c, r) for c, r in zip(centers, self.radii)), check=check)


@dataclass(frozen=True)
class OptimizerOptions:
    h: float = 1e-5
    mu0: float = 1e-2
    mu_factor: float = 10.0
    outer_tol: float = 1e-6
    inner_tol: float = 1e-5
    max_inner: int = 60
    max_iter: int = 400
    max_step: float = 0.2
    stationarity_tol: float = 1e-4
    active_tol: float = 1e-4
    polish_iter: int = 10
    gmres_tol: float = GMRES_TOL


@dataclass
class TraceEntry:
    iteration: int
    centers: np.ndarray
    cap: float
    violation: float
    mu: float
    n: int
    one_sided: bool = False


@dataclass
class OptimizationResult:
    centers: np.ndarray
    cap: float
    trace: list[TraceEntry]
    evaluations: int
    converged: bool
    stationarity: float
    violation: float
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    start: np.ndarray = field(default_factory=lambda: np.zeros(0))
    radii: tuple = ()

    def ordered(self) -> np.ndarray:
        """Indices of the disks counterclockwise from disk 1 (left to right on an interval)."""
        z = self.centers
        if np.all(z.imag == 0):
            return np.argsort(z.real, kind="stable")
        ang = np.mod(np.angle(z) - np.angle(z[0]), 2 * np.pi)
        return np.argsort(ang, kind="stable")

    def distances(self, cyclic: bool | None = None) -> np.ndarray:
        """Hyperbolic distances between neighbouring centers in :meth:`ordered` order."""
        z = self.centers[self.ordered()]
        if cyclic is None:
            cyclic = not np.all(self.centers.imag == 0)
        pairs = list(zip(z[:-1], z[1:]))
        if cyclic and len(z) > 2:
            pairs.append((z[-1], z[0]))
        return np.array([hyp_distance(a, b) for a, b in pairs])


class _Counter:
    def __init__(self):
        self.calls = 0


def objective(centers, problem: OptimizationProblem, n: int | None = None,
              counter: _Counter | None = None, tol: float = GMRES_TOL) -> float:
    """Capacity of the constellation with the given centers.

    Returns ``-inf`` when the disks overlap or leave the unit disk.
    """
    if counter is not None:
        counter.calls += 1
    z = np.asarray(centers, dtype=complex)
    if np.any(np.abs(z) >= 1):
        return -math.inf
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return capacity(problem.constellation(z), n or problem.n_solver, tol=tol).cap
    except (OverlapError, SingularSystemError, GMRESError):
        return -math.inf


def numerical_gradient(centers, problem: OptimizationProblem, h: float = 1e-5, n: int | None = None,
                       counter: _Counter | None = None, f0: float | None = None,
                       tol: float = GMRES_TOL) -> tuple[np.ndarray, bool]:
    """Central-difference gradient of the capacity in the free variables.

    Falls back to a one-sided difference for coordinates whose stencil
    leaves the feasible set; the second return value flags that fallback.
    """
    x = problem.to_vars(centers)
    g = np.zeros_like(x)
    one_sided = False
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp = objective(problem.to_centers(x + e), problem, n, counter, tol)
        fm = objective(problem.to_centers(x - e), problem, n, counter, tol)
        if math.isfinite(fp) and math.isfinite(fm):
            g[i] = (fp - fm) / (2 * h)
            continue
        one_sided = True
        if f0 is None:
            f0 = objective(centers, problem, n, counter, tol)
        if math.isfinite(fp):
            g[i] = (fp - f0) / h
        elif math.isfinite(fm):
            g[i] = (f0 - fm) / h
        else:
            raise GeometryError(f"both stencil points infeasible in coordinate {i}")
    return g, one_sided


def _whole_disk_slack(z: complex, r: float, R: float) -> float:
    c = hyp_to_euclidean(HyperbolicDisk(z, r))
    return R - abs(c.center) - c.radius


def constraint_values(x: np.ndarray, problem: OptimizationProblem,
                      jacobian: bool = False):
    """Inequality constraints ``g(x) >= 0`` and optionally their Jacobian."""
    z = problem.to_centers(x)
    rad = problem.radii
    m = problem.m
    R = problem.constraint.R
    # Jacobian with respect to the full (re, im) vector, reduced at the end
    rows, jrows = [], []
    for i in range(m):
        for j in range(i + 1, m):
            if abs(z[i]) >= 1 or abs(z[j]) >= 1 or z[i] == z[j]:
                rows.append(-1.0)
                jrows.append(np.zeros(2 * m))
                continue
            rows.append(hyp_distance(z[i], z[j]) - rad[i] - rad[j] - problem.margin)
            if jacobian:
                gi, gj = hyp_distance_grad(z[i], z[j])
                row = np.zeros(2 * m)
                row[2 * i:2 * i + 2] = gi.real, gi.imag
                row[2 * j:2 * j + 2] = gj.real, gj.imag
                jrows.append(row)
    spec = problem.constraint
    for i in range(m):
        if spec.kind == "interval-centers":
            for sgn in (1.0, -1.0):
                rows.append(R - sgn * z[i].real)
                row = np.zeros(2 * m)
                row[2 * i] = -sgn
                jrows.append(row)
        elif spec.whole_disk:
            if abs(z[i]) >= 1:
                rows.append(-1.0)
                jrows.append(np.zeros(2 * m))
                continue
            rows.append(_whole_disk_slack(z[i], rad[i], R))
            if jacobian:
                row = np.zeros(2 * m)
                d = 1e-7
                for k, step in enumerate((d, 1j * d)):
                    row[2 * i + k] = (_whole_disk_slack(z[i] + step, rad[i], R)
                                      - _whole_disk_slack(z[i] - step, rad[i], R)) / (2 * d)
                jrows.append(row)
        else:
            rows.append(R * R - abs(z[i]) ** 2)
            row = np.zeros(2 * m)
            row[2 * i:2 * i + 2] = -2 * z[i].real, -2 * z[i].imag
            jrows.append(row)
    g = np.array(rows)
    if not jacobian:
        return g
    J = np.array(jrows) if jrows else np.zeros((0, 2 * m))
    if problem.interval:
        J = J[:, 0::2]
    elif problem.pinned:
        J = np.delete(J, 1, axis=1)
    return g, J


def _violation(x, problem) -> float:
    g = constraint_values(x, problem)
    return float(max(0.0, -g.min() - problem.margin)) if g.size else 0.0


def random_start(problem: OptimizationProblem, rng: np.random.Generator,
                 attempts: int = 200, slack: float = 1e-3, gap: float = START_GAP) -> np.ndarray:
    """Rejection-sample centers in the constraint set with disjoint disks.

    Disks are placed one at a time; each placement gets ``attempts`` tries.
    Neighbouring disks keep a hyperbolic gap of at least ``gap``: nearly
    tangent circles are not resolved at the search fidelity, and a start
    there gives meaningless capacity values. Interval starts are sorted so
    that disk ``j`` is the ``j``-th from the left.
    """
    spec = problem.constraint
    R = spec.R
    for _ in range(attempts):
        placed: list[complex] = []
        for j in range(problem.m):
            for _ in range(attempts):
                if problem.interval:
                    z = complex(rng.uniform(-R, R))
                else:
                    rr = R * math.sqrt(rng.uniform())
                    z = rr * complex(math.cos(th := rng.uniform(0, 2 * math.pi)), math.sin(th))
                    if spec.whole_disk and _whole_disk_slack(z, problem.radii[j], R) < slack:
                        continue
                if all(hyp_distance(z, w) - problem.radii[j] - problem.radii[i] > problem.margin + gap
                       for i, w in enumerate(placed)):
                    placed.append(z)
                    break
            else:
                break
        if len(placed) == problem.m:
            z = np.array(placed)
            if problem.interval:
                z = np.sort(z.real).astype(complex)
                # sorting changes which radius sits where; re-check disjointness
                if np.all(constraint_values(problem.to_vars(z), problem)[: problem.m * (problem.m - 1) // 2]
                          > gap):
                    return z
                continue
            if problem.pinned and abs(z[0]) > 0:
                z = z * (abs(z[0]) / z[0])
                z[0] = abs(z[0])  # exactly on the positive real axis
            return z
    raise InfeasibleStartError(f"no feasible start found in {attempts} attempts")


def _stationarity(grad, J, g, active_tol) -> float:
    act = g <= active_tol
    if not np.any(act):
        return float(np.linalg.norm(grad))
    lam, res = nnls(J[act].T, -grad)
    return float(res)


class _Chart:
    """Internal coordinates of the optimizer.

    Disk-constrained problems move every center in polar form (rho, theta).
    The containment constraint then depends on rho alone, so a disk resting
    against the constraint circle can slide along it; in Cartesian
    coordinates every tangential step would cut into the barrier. The pin
    becomes theta_1 = 0. Interval problems use the real coordinates as is.
    """

    def __init__(self, problem: OptimizationProblem):
        self.problem = problem
        self.polar = not problem.interval

    def to_u(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if not self.polar:
            return z.real.copy()
        u = np.column_stack([np.abs(z), np.angle(z)]).ravel()
        return np.delete(u, 1) if self.problem.pinned else u

    def to_centers(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if not self.polar:
            return u.astype(complex)
        if self.problem.pinned:
            u = np.insert(u, 1, 0.0)
        return u[0::2] * np.exp(1j * u[1::2])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """The containment constraint as simple bounds on ``u``."""
        pr = self.problem
        R = pr.constraint.R
        if not self.polar:
            return np.full(pr.m, -R), np.full(pr.m, R)
        size = 2 * pr.m - (1 if pr.pinned else 0)
        lo, hi = np.full(size, -np.inf), np.full(size, np.inf)
        for j, k in enumerate(self.rho_index()):
            if pr.constraint.whole_disk:
                r = pr.radii[j]
                hi[k] = brentq(lambda t: _whole_disk_slack(t, r, R), 0.0, 1.0 - 1e-12, xtol=1e-15)
            else:
                hi[k] = R
        return lo, hi

    def normalize(self, u) -> tuple[np.ndarray, np.ndarray]:
        """Canonical chart point for the same centers: every rho_j >= 0.

        A negative rho_j is flipped with a half turn of theta_j; for the pinned
        disk the whole constellation is turned by pi instead, which leaves
        the capacity unchanged. Returns the new point and the +-1 factors by
        which each coordinate direction changed sign.
        """
        u = np.array(u, dtype=float)
        sign = np.ones_like(u)
        if not self.polar:
            return u, sign
        ri = self.rho_index()
        th = np.setdiff1d(np.arange(u.size), ri)
        if self.problem.pinned and u[0] < 0:
            u[0] = -u[0]
            sign[0] = -1.0
            u[th] += np.pi
        for k in ri:
            if u[k] < 0:
                u[k] = -u[k]
                sign[k] = -1.0
                if k + 1 < u.size and k + 1 in th:
                    u[k + 1] += np.pi
        u[th] = np.angle(np.exp(1j * u[th]))
        return u, sign

    def rho_index(self) -> np.ndarray:
        m = self.problem.m
        idx = 2 * np.arange(m)
        return idx - (idx > 0) if self.problem.pinned else idx

    def tangent(self, u) -> np.ndarray:
        """Jacobian of the problem variables (``problem.to_vars``) with respect to ``u``."""
        u = np.asarray(u, dtype=float)
        if not self.polar:
            return np.eye(u.size)
        full = np.insert(u, 1, 0.0) if self.problem.pinned else u
        m = self.problem.m
        T = np.zeros((2 * m, 2 * m))
        for j in range(m):
            rho, th = full[2 * j], full[2 * j + 1]
            c, s = math.cos(th), math.sin(th)
            T[2 * j:2 * j + 2, 2 * j:2 * j + 2] = [[c, -rho * s], [s, rho * c]]
        if self.problem.pinned:
            T = np.delete(np.delete(T, 1, axis=0), 1, axis=1)
        return T


def _barrier_hessian(u, cons, mu, g, J, d: float = 1e-6) -> np.ndarray:
    """Hessian of ``-mu * sum(log g_i)``; constraint curvature by differencing the Jacobian."""
    H = (J.T * (mu / g ** 2)) @ J
    w = mu / g
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = d
        H[:, k] -= w @ ((cons(u + e)[1] - cons(u - e)[1]) / (2 * d))
    return 0.5 * (H + H.T)


def _make_pd(H: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    lam, V = np.linalg.eigh(H)
    top = max(abs(lam).max(), 1.0)
    if lam.min() > floor * top:
        return H
    lam = np.maximum(np.abs(lam), floor * top)
    return (V * lam) @ V.T


def maximize(start, problem: OptimizationProblem, opts: OptimizerOptions = OptimizerOptions()
             ) -> OptimizationResult:
    """Local maximizer of the capacity from a feasible start."""
    z0 = np.asarray(start, dtype=complex)
    if z0.shape != (problem.m,):
        raise ValueError(f"start has {z0.size} centers, problem has {problem.m} disks")
    if problem.interval and np.any(z0.imag != 0):
        raise InfeasibleStartError("interval problems need real starting centers")
    if problem.pinned:
        if abs(z0[0]) == 0:
            raise InfeasibleStartError("the pinned disk may not start at the origin")
        z0 = z0 * (abs(z0[0]) / z0[0])
    if np.any(constraint_values(problem.to_vars(z0), problem) <= 0):
        raise InfeasibleStartError("start violates the constraints")

    chart = _Chart(problem)
    u = chart.to_u(z0)
    counter = _Counter()
    trace: list[TraceEntry] = []
    it = 0
    h, tol = opts.h, opts.gmres_tol

    def cons(uv, jacobian=True):
        x = problem.to_vars(chart.to_centers(uv))
        if not jacobian:
            return constraint_values(x, problem)
        g, J = constraint_values(x, problem, jacobian=True)
        return g, J @ chart.tangent(uv)

    def f_at(uv, n):
        return objective(chart.to_centers(uv), problem, n, counter, tol)

    def phi_parts(uv, mu, n):
        gv = cons(uv, False)
        if np.any(gv <= 0):
            return math.inf, -math.inf
        fv = f_at(uv, n)
        if not math.isfinite(fv):
            return math.inf, fv
        return -fv - mu * np.log(gv).sum(), fv

    def cap_grad(uv, n, fv):
        """Capacity gradient in u, from the Cartesian central differences."""
        gx, flag = numerical_gradient(chart.to_centers(uv), problem, h, n, counter, fv, tol)
        return chart.tangent(uv).T @ gx, flag

    def record(uv, fv, mu, n, flag=False):
        x = problem.to_vars(chart.to_centers(uv))
        trace.append(TraceEntry(it, chart.to_centers(uv), fv, _violation(x, problem), mu, n, flag))

    # B models the Hessian of -cap. That Hessian is indefinite, so B is
    # updated by the symmetric rank-one formula rather than BFGS; the barrier
    # Hessian is formed exactly at every step.
    B = np.eye(u.size)

    def inner(uv, mu, n, max_inner):
        nonlocal it, B
        phi, fv = phi_parts(uv, mu, n)
        gf, flag = cap_grad(uv, n, fv)
        gv, J = cons(uv)
        gphi = -gf - J.T @ (mu / gv)
        for _ in range(max_inner):
            if np.abs(gphi).max() <= max(opts.inner_tol, 10 * mu) or it >= opts.max_iter:
                break
            Hb = B + _barrier_hessian(uv, cons, mu, gv, J)
            if not (np.all(np.isfinite(Hb)) and np.all(np.isfinite(gphi))):
                break
            p = -np.linalg.solve(_make_pd(Hb), gphi)
            if np.linalg.norm(p) > opts.max_step:
                p *= opts.max_step / np.linalg.norm(p)
            slope = gphi @ p
            # a shrinking constraint may not pass half its estimated barrier-optimal
            # slack mu / lambda_i; backing out again would cost capacity, which the
            # monotone rule forbids
            jn2 = np.maximum((J * J).sum(axis=1), 1e-300)
            lam = np.maximum(-(J @ gf) / jn2, 1e-2 * np.abs(gf).max() / np.sqrt(jn2))
            floor = 0.5 * mu / np.maximum(lam, 1e-300)
            a = 1.0
            accepted = False
            while a > 1e-10:
                un = uv + a * p
                phin, fn = phi_parts(un, mu, n)
                if phin <= phi + 1e-4 * a * slope and fn >= fv:
                    gn = cons(un, False)
                    if np.all((gn >= gv) | (gn >= floor)):
                        accepted = True
                        break
                a *= 0.5
            if not accepted:
                break
            gfn, flag = cap_grad(un, n, fn)
            gv, J = cons(un)
            s = un - uv
            r = (gf - gfn) - B @ s
            rs = r @ s
            if abs(rs) > 1e-8 * np.linalg.norm(r) * np.linalg.norm(s):
                B = B + np.outer(r, r) / rs
            stalled = phi - phin <= 1e-13 * (1.0 + abs(phi))
            un, sign = chart.normalize(un)
            if np.any(sign < 0):
                B = B * np.outer(sign, sign)
                gfn = gfn * sign
                J = J * sign
            uv, phi, fv, gf = un, phin, fn, gfn
            gphi = -gf - J.T @ (mu / gv)
            it += 1
            record(uv, fv, mu, n, flag)
            if stalled:
                break
        return uv, fv

    def kkt(uv, n, fv):
        z = chart.to_centers(uv)
        gx, _ = numerical_gradient(z, problem, h, n, counter, fv, tol)
        g, Jx = constraint_values(problem.to_vars(z), problem, jacobian=True)
        return _stationarity(gx, Jx, g, opts.active_tol)

    lo, hi = chart.bounds()

    def feasible(uv):
        return bool(np.all(cons(uv, False) >= -1e-12))

    def grad_u(uv, idx, n):
        """Central differences of the capacity along the chart coordinates ``idx``."""
        out = np.zeros(len(idx))
        for q, k in enumerate(idx):
            e = np.zeros_like(uv)
            e[k] = h
            fp, fm = f_at(np.minimum(uv + e, hi), n), f_at(np.maximum(uv - e, lo), n)
            out[q] = (fp - fm) / (np.minimum(uv + e, hi)[k] - np.maximum(uv - e, lo)[k])
        return out

    def polish(uv, fv, n, iters):
        """Active-set cleanup after the barrier phase.

        Containment bounds that are nearly active and against which the
        capacity pushes are fixed exactly on the bound; Newton steps with a
        difference Hessian then act on the remaining coordinates. A barrier
        iterate keeps an O(mu) distance to active bounds, and closing that
        gap within the barrier would require steps that lower the capacity.
        """
        nonlocal it
        allidx = np.arange(uv.size)
        g = grad_u(uv, allidx, n)
        for _ in range(iters):
            at_hi = (hi - uv <= opts.active_tol) & (g > 0)
            at_lo = (uv - lo <= opts.active_tol) & (g < 0)
            un = np.where(at_hi, hi, np.where(at_lo, lo, uv))
            if np.any(un != uv) and feasible(un):
                fn = f_at(un, n)
                if fn >= fv:
                    uv, fv = un, fn
                    it += 1
                    record(uv, fv, 0.0, n)
                    g = grad_u(uv, allidx, n)
            free = np.flatnonzero(~((uv == hi) & (g > 0) | (uv == lo) & (g < 0)))
            gF = g[free]
            if free.size == 0 or np.abs(gF).max() <= 0.1 * opts.stationarity_tol:
                break
            H = np.zeros((free.size, free.size))
            d = 1e-4
            for q, k in enumerate(free):
                e = np.zeros_like(uv)
                e[k] = d
                H[:, q] = -(grad_u(uv + e, free, n) - gF) / d
            if not np.all(np.isfinite(H)):
                break  # a probe left the resolved region; keep the current iterate
            p = np.linalg.solve(_make_pd(0.5 * (H + H.T)), gF)
            if np.linalg.norm(p) > opts.max_step:
                p *= opts.max_step / np.linalg.norm(p)
            a = 1.0
            while a > 1e-8:
                un = uv.copy()
                un[free] += a * p
                un = np.clip(un, lo, hi)
                if feasible(un):
                    fn = f_at(un, n)
                    # sufficient increase along the projected (clipped) step
                    if fn >= fv + 1e-4 * (g @ (un - uv)) and fn > fv:
                        break
                a *= 0.5
            else:
                break
            uv, fv = un, fn
            it += 1
            record(uv, fv, 0.0, n)
            g = grad_u(uv, allidx, n)
        return uv, fv

    f0 = f_at(u, problem.n_solver)
    record(u, f0, opts.mu0, problem.n_solver)
    mu = opts.mu0
    while True:
        u, fu = inner(u, mu, problem.n_solver, opts.max_inner)
        if mu <= opts.outer_tol * (1 + 1e-12) or it >= opts.max_iter:
            break
        mu /= opts.mu_factor

    u, fu = polish(u, fu, problem.n_solver, opts.polish_iter)

    # stationarity check at the higher fidelity, polished again if needed
    n_hi = problem.n_polish
    fu = f_at(u, n_hi)
    record(u, fu, mu, n_hi)
    stat = kkt(u, n_hi, fu)
    if stat > opts.stationarity_tol and opts.polish_iter > 0:
        u, fu = polish(u, fu, n_hi, opts.polish_iter)
        stat = kkt(u, n_hi, fu)

    z = chart.to_centers(u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        final = capacity(problem.constellation(z), n_hi, tol=tol)
    counter.calls += 1
    viol = _violation(problem.to_vars(z), problem)
    converged = stat <= opts.stationarity_tol and viol <= 1e-9 and it < opts.max_iter
    return OptimizationResult(z, final.cap, trace, counter.calls, converged, stat, viol,
                              b=final.b, start=np.asarray(start, dtype=complex), radii=problem.radii)


def dedupe(results: Sequence[OptimizationResult], tol: float = 1e-4) -> list[OptimizationResult]:
    """Keep one result per capacity level, highest capacity first."""
    out: list[OptimizationResult] = []
    for r in sorted(results, key=lambda r: -r.cap):
        if all(abs(r.cap - q.cap) > tol for q in out):
            out.append(r)
    return out


def multistart(problem: OptimizationProblem, k: int, seed: int = 0,
               opts: OptimizerOptions = OptimizerOptions(), dedupe_tol: float = 1e-4,
               return_all: bool = False):
    """Run ``k`` maximizations from seeded random starts.

    Returns the distinct local maxima (by capacity), sorted descending, and
    with ``return_all`` also every individual run.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    starts = [random_start(problem, rng) for _ in range(k)]
    runs = [maximize(s, problem, opts) for s in starts]
    levels = dedupe(runs, dedupe_tol)
    return (levels, runs) if return_all else levels
