"""Unrestarted GMRES with full orthogonalization of the Krylov basis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

_TINY = 1e-300


class GMRESError(RuntimeError):
    def __init__(self, msg, x=None, residual=None, iterations=None):
        super().__init__(msg)
        self.x = x
        self.residual = residual
        self.iterations = iterations


@dataclass
class GMRESInfo:
    iterations: int
    residual: float  # relative true residual of the returned iterate


def gmres(apply: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray, tol: float = 1e-14,
          maxit: int | None = None):
    """Solve ``apply(x) = rhs`` from a zero initial guess, without restarts.

    Each new Arnoldi vector is orthogonalized against the whole basis with
    two passes of classical Gram-Schmidt. A column stops once its Givens
    residual estimate drops below ``tol * |rhs|``; :class:`GMRESError` is
    raised if some column has not converged after ``maxit`` steps.

    ``rhs`` may be a 2-D array, in which case every column gets its own
    independent GMRES iteration (run in lockstep so that ``apply`` sees
    matrix arguments) and a list of :class:`GMRESInfo` is returned.
    """
    b = np.asarray(rhs, dtype=float)
    single = b.ndim == 1
    B = b[:, None] if single else b
    D, p = B.shape
    maxit = D if maxit is None else max(1, min(int(maxit), D))

    def op(V):
        # copy: the result is orthogonalized in place and may alias the basis
        out = np.array(apply(V[:, 0] if single else V), dtype=float)
        out = out.reshape(D, 1) if single else out
        if out.shape != (D, p):
            raise ValueError(f"operator returned shape {out.shape}, expected {(D, p)}")
        return out

    beta = np.linalg.norm(B, axis=0)
    done = beta == 0.0
    kconv = np.zeros(p, dtype=int)

    cap = min(maxit, 32) + 1
    Q = np.empty((cap, D, p))
    R = np.zeros((p, cap, cap))
    cs = np.zeros((cap, p))
    sn = np.zeros((cap, p))
    g = np.zeros((cap + 1, p))
    g[0] = beta
    Q[0] = B / np.where(done, 1.0, beta)

    k = 0
    while not done.all() and k < maxit:
        if k + 2 > Q.shape[0]:
            new = min(2 * Q.shape[0], maxit + 1)
            Q = np.concatenate([Q, np.empty((new - Q.shape[0], D, p))])
            R2 = np.zeros((p, new, new))
            R2[:, :R.shape[1], :R.shape[2]] = R
            R = R2
            cs = np.concatenate([cs, np.zeros((new - cs.shape[0], p))])
            sn = np.concatenate([sn, np.zeros((new - sn.shape[0], p))])
            g = np.concatenate([g, np.zeros((new + 1 - g.shape[0], p))])
        w = op(Q[k])
        basis = Q[:k + 1]
        h = np.einsum("kdp,dp->kp", basis, w)
        w -= np.einsum("kp,kdp->dp", h, basis)
        dh = np.einsum("kdp,dp->kp", basis, w)
        w -= np.einsum("kp,kdp->dp", dh, basis)
        h += dh
        hnext = np.linalg.norm(w, axis=0)
        breakdown = hnext <= _TINY
        Q[k + 1] = w / np.where(breakdown, 1.0, hnext)
        for i in range(k):
            h[i], h[i + 1] = cs[i] * h[i] + sn[i] * h[i + 1], -sn[i] * h[i] + cs[i] * h[i + 1]
        r = np.hypot(h[k], hnext)
        r = np.where(r == 0.0, 1.0, r)
        cs[k], sn[k] = h[k] / r, hnext / r
        h[k] = r
        live = ~done
        R[live, :k + 1, k] = h[:, live].T
        g[k + 1] = np.where(live, -sn[k] * g[k], 0.0)
        g[k] = np.where(live, cs[k] * g[k], g[k])
        k += 1
        hit = live & ((np.abs(g[k]) <= tol * beta) | breakdown)
        kconv[hit] = k
        done |= hit

    X = np.zeros((D, p))
    for j in range(p):
        kj = kconv[j] if done[j] else k
        if kj == 0:
            continue
        y = solve_triangular(R[j, :kj, :kj], g[:kj, j])
        X[:, j] = np.tensordot(y, Q[:kj, :, j], axes=1)
    res = np.linalg.norm(B - op(X), axis=0) / np.where(beta == 0, 1.0, beta)
    infos = [GMRESInfo(int(kconv[j] if done[j] else k), float(res[j])) for j in range(p)]
    x = X[:, 0] if single else X
    if not done.all():
        bad = int(np.argmax(~done))
        raise GMRESError(f"GMRES did not reach tol={tol:g} in {k} iterations "
                         f"(relative residual {res[bad]:.3e})", x=x, residual=float(res[bad]), iterations=k)
    return (x, infos[0]) if single else (x, infos)
