"""Bound-constrained convex quadratic solver (projected-gradient / active-set
hybrid in the GPCG style).

Minimizes Q(s) = 1/2 <H s, s> + <g, s> subject to lower <= s <= upper.
Termination is on the projected-gradient stationarity of Q:
||P(s - (H s + g)) - s|| <= tol.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linalg import IndefiniteMatrixError, solve_spd

_SUFFICIENT_DECREASE = 0.1
_MAX_PG_BACKTRACKS = 30


@dataclass
class BoxQp:
    H: object
    g: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    tol: float = 1e-11


@dataclass
class QpResult:
    s: np.ndarray
    converged: bool
    cycles: int
    pg_norm: float
    regularization: float = 0.0


def _projected_cauchy_step(H, g, s, r, lower, upper, q_s):
    """One sufficient-decrease step along the projected steepest descent path."""
    curv = r @ (H @ r)
    t = (r @ r) / curv if curv > 0.0 else 1.0
    for _ in range(_MAX_PG_BACKTRACKS):
        cand = np.clip(s - t * r, lower, upper)
        step = cand - s
        if not np.any(step):
            return s, q_s
        q_cand = 0.5 * (cand @ (H @ cand)) + g @ cand
        if q_cand - q_s <= _SUFFICIENT_DECREASE * (r @ step):
            return cand, q_cand
        t *= 0.5
    return s, q_s


def solve_box_qp(qp, max_cycles=100):
    """Solve a box-constrained QP; 0 must be feasible.

    Alternates projected-gradient sweeps (active-set identification) with CG
    solves on the free variables.  If CG reports non-positive curvature the
    Hessian is shifted by tau*I with tau = 1e-8 * max|H| and tau grows
    tenfold until the shifted model is positive on the explored subspace;
    stationarity is then measured for the shifted model.
    """
    g = np.asarray(qp.g, dtype=float)
    lower = np.asarray(qp.lower, dtype=float)
    upper = np.asarray(qp.upper, dtype=float)
    n = g.size
    H = qp.H
    h_scale = np.abs(H.data).max() if sp.issparse(H) and H.nnz else np.abs(np.asarray(H)).max()
    tau = 0.0
    Hw = H

    s = np.clip(np.zeros(n), lower, upper)
    q_s = 0.5 * (s @ (Hw @ s)) + g @ s
    pg_norm = np.inf
    cycle = 0
    while cycle < max_cycles:
        cycle += 1
        r = Hw @ s + g
        pg = np.clip(s - r, lower, upper) - s
        pg_norm = np.linalg.norm(pg)
        if pg_norm <= qp.tol:
            return QpResult(s, True, cycle, pg_norm, tau)

        s, q_s = _projected_cauchy_step(Hw, g, s, r, lower, upper, q_s)
        r = Hw @ s + g

        at_lower = s <= lower
        at_upper = s >= upper
        free = ~((at_lower & (r >= 0.0)) | (at_upper & (r <= 0.0)))
        if not free.any():
            continue
        Hff = Hw[free][:, free] if sp.issparse(Hw) else np.asarray(Hw)[np.ix_(free, free)]
        rf = r[free]
        rf_norm = np.linalg.norm(rf)
        rtol = max(1e-13, min(1e-2, 0.1 * qp.tol / max(rf_norm, 1e-300)))
        try:
            df = solve_spd(Hff, -rf, rtol=rtol)
        except IndefiniteMatrixError:
            tau = 10.0 * tau if tau > 0.0 else 1e-8 * max(h_scale, 1.0)
            Hw = H + tau * sp.identity(n, format="csr") if sp.issparse(H) \
                else H + tau * np.eye(n)
            q_s = 0.5 * (s @ (Hw @ s)) + g @ s
            continue
        d = np.zeros(n)
        d[free] = df
        # exact step along d, truncated at the first new bound
        denom = d @ (Hw @ d)
        alpha = -(r @ d) / denom if denom > 0.0 else 1.0
        pos = d > 0.0
        neg = d < 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            caps = np.concatenate([
                (upper[pos] - s[pos]) / d[pos],
                (lower[neg] - s[neg]) / d[neg],
            ])
        alpha_max = caps.min() if caps.size else np.inf
        alpha = min(max(alpha, 0.0), alpha_max)
        cand = np.clip(s + alpha * d, lower, upper)
        q_cand = 0.5 * (cand @ (Hw @ cand)) + g @ cand
        if q_cand <= q_s:
            s, q_s = cand, q_cand
    r = Hw @ s + g
    pg_norm = np.linalg.norm(np.clip(s - r, lower, upper) - s)
    return QpResult(s, pg_norm <= qp.tol, cycle, pg_norm, tau)
