"""The solution methods: NRAS-B and TL-NRAS-B preconditioner steps, the
Newton-SQP and semismooth Newton baselines, and the preconditioned
Newton-SQP driver (with or without the coarse level).

Every method works on an objective exposing energy/gradient/hessian over its
degrees of freedom plus the box (lower, upper); every iterate stays inside
the box exactly (clamped arithmetic), and the Euclidean norm of the
projected gradient is the universal termination measure.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .decomposition import extract_local
from .linalg import IndefiniteMatrixError, projected_gradient, solve_spd
from .linesearch import LineSearchConfig, armijo
from .qp import BoxQp, solve_box_qp
from . import coarse as coarse_mod

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
STAGNATED = "stagnated"


@dataclass
class SolverConfig:
    outer_tol: float = 1e-8
    inner_tol: float = 1e-11
    max_outer: int = 100
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    n_subdomains: int = 16
    overlap: int = 3
    local_max_iter: int = 50
    coarse_max_iter: int = 100
    stagnation_tol: float = 1e-15

    def __post_init__(self):
        if self.outer_tol <= 0.0 or self.inner_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.inner_tol > self.outer_tol:
            raise ValueError("inner tolerance must not exceed the outer tolerance")

    def local_config(self):
        return SolverConfig(outer_tol=self.inner_tol, inner_tol=self.inner_tol,
                            max_outer=self.local_max_iter, line_search=self.line_search)


@dataclass
class IterationInfo:
    index: int
    prn: float
    energy: float
    alpha: float = np.nan
    alpha_hat: float = np.nan
    local_iterations: tuple = ()
    coarse_iterations: int = 0


@dataclass
class ConvergenceRecord:
    history: list
    status: str

    @property
    def prn_history(self):
        return np.array([h.prn for h in self.history])

    @property
    def n_iterations(self):
        return len(self.history) - 1

    @property
    def converged(self):
        return self.status == CONVERGED


@dataclass
class StepInfo:
    alpha: float = 0.0
    alpha_hat: float = np.nan
    stalled: bool = False
    local_iterations: tuple = ()
    coarse_iterations: int = 0


def _require_feasible(v, objective):
    if np.any(v < objective.lower) or np.any(v > objective.upper):
        raise ValueError("initial iterate violates the bound constraints")


def _prn(objective, v, g=None):
    if g is None:
        g = objective.gradient(v)
    return float(np.linalg.norm(
        projected_gradient(v, g, objective.lower, objective.upper)))


# ---------------------------------------------------------------------------
# preconditioner iterations
# ---------------------------------------------------------------------------

def nrasb_step(objective, decomposition, v, cfg):
    """One restricted additive Schwarz sweep with feasible local solves.

    Solves the frozen-exterior subproblem on each overlapping subdomain with
    Newton-SQP, aggregates the owned parts of the local corrections and
    line-searches the global energy along the aggregate.
    """
    local_cfg = cfg.local_config()
    delta = np.zeros(v.size)
    local_iters = []
    for i in range(decomposition.n_subdomains):
        idx = decomposition.overlapping[i]
        local = extract_local(objective, decomposition, i, v)
        vi0 = v[idx]
        vi_star, rec = newton_sqp_solve(local, vi0, local_cfg)
        local_iters.append(rec.n_iterations)
        pos = decomposition.owned_pos[i]
        delta[decomposition.owned[i]] = (vi_star - vi0)[pos]
    info = StepInfo(local_iterations=tuple(local_iters))
    if not np.any(delta):
        info.stalled = True
        return v, info
    slope = objective.gradient(v) @ delta
    ls = armijo(objective.energy, v, delta, slope, cfg.line_search)
    info.alpha = ls.alpha
    info.stalled = ls.stalled
    if ls.stalled:
        return v, info
    v_new = np.clip(v + ls.alpha * delta, objective.lower, objective.upper)
    return v_new, info


def tl_nrasb_step(objective, decomposition, hierarchy, v, cfg):
    """Inverted V-cycle: coarse half-step followed by one NRAS-B sweep."""
    v_half, cinfo = coarse_mod.coarse_step(
        objective, hierarchy, v, inner_tol=cfg.inner_tol,
        max_iter=cfg.coarse_max_iter, ls_cfg=cfg.line_search)
    v_new, info = nrasb_step(objective, decomposition, v_half, cfg)
    info.alpha_hat = cinfo["alpha_hat"]
    info.coarse_iterations = cinfo["coarse_iterations"]
    info.stalled = info.stalled and cinfo["stalled"]
    return v_new, info


# ---------------------------------------------------------------------------
# outer solvers
# ---------------------------------------------------------------------------

def raspnb_solve(objective, decomposition=None, hierarchy=None, v0=None, cfg=None):
    """Preconditioned Newton-SQP: an optional NRAS-B / TL-NRAS-B step
    followed by a box-QP Newton step with an Armijo line search.

    With decomposition=None the preconditioner phase is skipped and the loop
    is plain Newton-SQP.
    """
    cfg = cfg or SolverConfig()
    if v0 is None:
        v0 = objective.initial_guess()
    v = np.asarray(v0, dtype=float).copy()
    _require_feasible(v, objective)

    history = [IterationInfo(0, _prn(objective, v), objective.energy(v))]
    status = MAX_ITERATIONS
    for k in range(cfg.max_outer):
        if history[-1].prn <= cfg.outer_tol:
            status = CONVERGED
            break
        step_info = StepInfo()
        if decomposition is not None:
            if hierarchy is not None:
                v_plus, step_info = tl_nrasb_step(objective, decomposition, hierarchy, v, cfg)
            else:
                v_plus, step_info = nrasb_step(objective, decomposition, v, cfg)
        else:
            v_plus = v
        g = objective.gradient(v_plus)
        H = objective.hessian(v_plus)
        qp = BoxQp(H, g, objective.lower - v_plus, objective.upper - v_plus, cfg.inner_tol)
        res = solve_box_qp(qp)
        s = res.s
        ls = armijo(objective.energy, v_plus, s, g @ s, cfg.line_search)
        if ls.stalled:
            v_new = v_plus
        else:
            v_new = np.clip(v_plus + ls.alpha * s, objective.lower, objective.upper)
        prn = _prn(objective, v_new)
        history.append(IterationInfo(
            k + 1, prn, objective.energy(v_new), alpha=ls.alpha,
            alpha_hat=step_info.alpha_hat,
            local_iterations=step_info.local_iterations,
            coarse_iterations=step_info.coarse_iterations))
        if np.max(np.abs(v_new - v)) < cfg.stagnation_tol and prn > cfg.outer_tol:
            v = v_new
            status = STAGNATED
            break
        v = v_new
    if history[-1].prn <= cfg.outer_tol:
        status = CONVERGED
    return v, ConvergenceRecord(history, status)


def newton_sqp_solve(objective, v0=None, cfg=None):
    """Newton-SQP: quadratic model minimized under the shifted box at every
    iteration.  Identical to the preconditioned driver without its
    preconditioner phase."""
    return raspnb_solve(objective, None, None, v0, cfg)


def run_preconditioner_only(objective, decomposition, hierarchy=None, v0=None, cfg=None):
    """Iterate the NRAS-B / TL-NRAS-B fixed point alone until the outer
    termination test."""
    cfg = cfg or SolverConfig()
    if v0 is None:
        v0 = objective.initial_guess()
    v = np.asarray(v0, dtype=float).copy()
    _require_feasible(v, objective)

    history = [IterationInfo(0, _prn(objective, v), objective.energy(v))]
    status = MAX_ITERATIONS
    for k in range(cfg.max_outer):
        if history[-1].prn <= cfg.outer_tol:
            status = CONVERGED
            break
        if hierarchy is not None:
            v_new, info = tl_nrasb_step(objective, decomposition, hierarchy, v, cfg)
        else:
            v_new, info = nrasb_step(objective, decomposition, v, cfg)
        prn = _prn(objective, v_new)
        history.append(IterationInfo(
            k + 1, prn, objective.energy(v_new), alpha=info.alpha,
            alpha_hat=info.alpha_hat, local_iterations=info.local_iterations,
            coarse_iterations=info.coarse_iterations))
        if np.max(np.abs(v_new - v)) < cfg.stagnation_tol and prn > cfg.outer_tol:
            v = v_new
            status = STAGNATED
            break
        v = v_new
    if history[-1].prn <= cfg.outer_tol:
        status = CONVERGED
    return v, ConvergenceRecord(history, status)


def _regularized_solve(H, rows, rhs, base_scale):
    """Solve the reduced Newton system, shifting by tau*I if CG reports
    non-positive curvature."""
    Hrr = H[rows][:, rows] if sp.issparse(H) else np.asarray(H)[np.ix_(rows, rows)]
    tau = 0.0
    for _ in range(20):
        M = Hrr if tau == 0.0 else Hrr + tau * sp.identity(Hrr.shape[0], format="csr")
        try:
            return solve_spd(M, rhs, rtol=1e-12)
        except IndefiniteMatrixError:
            tau = 10.0 * tau if tau > 0.0 else 1e-8 * max(base_scale, 1.0)
    raise IndefiniteMatrixError("reduced Newton system could not be regularized")


def semismooth_newton_solve(objective, v0=None, cfg=None):
    """Reduced-space semismooth Newton for the projected gradient equation.

    At each iterate the bound-active sets are estimated from v - grad f(v);
    active components are moved to their bound, the Newton system is solved
    on the inactive set, and the step is globalized by a projected Armijo
    backtracking search on the norm of the projected gradient (the natural
    merit for a Newton iteration on the stationarity equation).
    """
    cfg = cfg or SolverConfig()
    if v0 is None:
        v0 = objective.initial_guess()
    v = np.asarray(v0, dtype=float).copy()
    _require_feasible(v, objective)
    lower, upper = objective.lower, objective.upper

    history = [IterationInfo(0, _prn(objective, v), objective.energy(v))]
    status = MAX_ITERATIONS
    for k in range(cfg.max_outer):
        if history[-1].prn <= cfg.outer_tol:
            status = CONVERGED
            break
        g = objective.gradient(v)
        H = objective.hessian(v)
        trial = v - g
        act_lo = trial < lower
        act_hi = trial > upper
        active = act_lo | act_hi
        d = np.zeros(v.size)
        d[act_lo] = lower[act_lo] - v[act_lo]
        d[act_hi] = upper[act_hi] - v[act_hi]
        inactive = ~active
        if inactive.any():
            rhs = -g[inactive]
            if active.any():
                Hia = H[inactive][:, active] if sp.issparse(H) \
                    else np.asarray(H)[np.ix_(inactive, active)]
                rhs = rhs - Hia @ d[active]
            scale = np.abs(H.data).max() if sp.issparse(H) and H.nnz \
                else np.abs(np.asarray(H)).max()
            d[inactive] = _regularized_solve(H, np.flatnonzero(inactive), rhs, scale)
        # backtrack on the projected-gradient norm of the projected trial
        ls_cfg = cfg.line_search
        prn_old = history[-1].prn
        alpha = ls_cfg.alpha0
        v_new, prn = v, prn_old
        accepted = False
        for _ in range(ls_cfg.max_backtracks + 1):
            cand = np.clip(v + alpha * d, lower, upper)
            prn_cand = _prn(objective, cand)
            if prn_cand <= (1.0 - ls_cfg.c1 * alpha) * prn_old:
                v_new, prn, accepted = cand, prn_cand, True
                break
            alpha *= ls_cfg.rho
        if not accepted:
            status = STAGNATED
            break
        history.append(IterationInfo(k + 1, prn, objective.energy(v_new), alpha=alpha))
        if np.max(np.abs(v_new - v)) < cfg.stagnation_tol and prn > cfg.outer_tol:
            v = v_new
            status = STAGNATED
            break
        v = v_new
    if history[-1].prn <= cfg.outer_tol:
        status = CONVERGED
    return v, ConvergenceRecord(history, status)
