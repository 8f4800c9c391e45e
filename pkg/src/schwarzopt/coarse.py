"""Coarse level for the two-level Schwarz preconditioner: nested coarse
space, transfer operators, slack-based constraint projection and the
first-order consistent augmented coarse objective.

The coarse grid must be nested in the fine grid (same diagonal direction,
fine cells a multiple of coarse cells), so every coarse node coincides with
a fine node and primal transfer is plain injection.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linesearch import DEFAULT as LS_DEFAULT
from .linesearch import armijo


class CoarseHierarchy:
    """Nested coarse space with prolongation, restriction and injection.

    Attributes
    ----------
    coarse_problem : Problem
        The same energy discretized on the coarse mesh.
    P0_full : (N_fine, N_coarse) CSR
        P1 interpolation; nonnegative entries, interior rows sum to 1.
    P0_free : (n_fine_free, n_coarse_free) CSR
        Interpolation restricted to free nodes on both levels; used to
        prolongate corrections (which vanish on the boundary).
    inject : (N_coarse,) int array
        Fine node coincident with each coarse node.
    """

    def __init__(self, fine_problem, coarse_cells):
        fine_n = fine_problem.mesh.cells_per_side
        if coarse_cells < 1 or fine_n % coarse_cells != 0:
            raise ValueError(
                f"coarse cells ({coarse_cells}) must divide fine cells ({fine_n})")
        self.fine_problem = fine_problem
        self.fine_space = fine_problem.space
        self.coarse_problem = fine_problem.with_resolution(coarse_cells)
        self.coarse_space = self.coarse_problem.space
        ratio = fine_n // coarse_cells
        self.ratio = ratio

        nc = coarse_cells
        self.P0_full = _nested_p1_interpolation(fine_n, nc)
        cx, cy = np.meshgrid(np.arange(nc + 1), np.arange(nc + 1))
        self.inject = (cy.ravel() * ratio * (fine_n + 1) + cx.ravel() * ratio)

        ff = self.fine_space.free_nodes
        cf = self.coarse_space.free_nodes
        self.P0_free = self.P0_full[ff][:, cf].tocsr()
        self.R0_free = self.P0_free.T.tocsr()
        # per coarse-free-node support: fine nodes with a positive P0 entry
        csc = self.P0_full[:, cf].tocsc()
        self._support_indices = csc.indices
        self._support_ptr = csc.indptr

    def basis_support(self, t):
        """Fine nodes inside the support of the t-th coarse free basis."""
        return self._support_indices[self._support_ptr[t]:self._support_ptr[t + 1]]

    def project_primal(self, u_full):
        """Injection at coincident nodes, returning a full coarse vector."""
        return u_full[self.inject]


def _nested_p1_interpolation(fine_n, coarse_n):
    """P1 interpolation matrix from the coarse to the fine structured grid."""
    ratio = fine_n // coarse_n
    ix, iy = np.meshgrid(np.arange(fine_n + 1), np.arange(fine_n + 1))
    ix, iy = ix.ravel(), iy.ravel()
    cx = np.minimum(ix // ratio, coarse_n - 1)
    cy = np.minimum(iy // ratio, coarse_n - 1)
    xi = (ix - cx * ratio) / ratio
    eta = (iy - cy * ratio) / ratio

    bl = cy * (coarse_n + 1) + cx
    br = bl + 1
    tl = bl + (coarse_n + 1)
    tr = tl + 1

    lower = xi >= eta          # triangle (bl, br, tr), diagonal bl-tr
    cols = np.where(lower[:, None], np.stack([bl, br, tr], axis=1),
                    np.stack([bl, tr, tl], axis=1))
    w_lower = np.stack([1.0 - xi, xi - eta, eta], axis=1)
    w_upper = np.stack([1.0 - eta, xi, eta - xi], axis=1)
    weights = np.where(lower[:, None], w_lower, w_upper)

    rows = np.repeat(np.arange(ix.size), 3)
    keep = weights.ravel() > 0.0
    P = sp.coo_matrix((weights.ravel()[keep], (rows[keep], cols.ravel()[keep])),
                      shape=(ix.size, (coarse_n + 1) ** 2))
    return P.tocsr()


def build_hierarchy(fine_problem, coarse_cells):
    """Nested two-grid hierarchy for a problem; fine cells must be a
    multiple of coarse cells."""
    return CoarseHierarchy(fine_problem, coarse_cells)


def project_constraints(bounds, v, hier):
    """Coarse box from the tightest fine slack inside each basis support.

    For each coarse free node t:
        lower_t = (injected v)_t + max_j (lower_fine - u)_j
        upper_t = (injected v)_t + min_j (upper_fine - u)_j
    with j running over the fine nodes in the support of basis t.  Built this
    way, prolongated coarse corrections scaled by any step in [0, 1] keep the
    fine iterate inside its box.
    """
    u = hier.fine_space.embed(v)
    slack_lo = bounds.lower - u
    slack_hi = bounds.upper - u
    idx, ptr = hier._support_indices, hier._support_ptr
    lo = np.maximum.reduceat(slack_lo[idx], ptr[:-1])
    hi = np.minimum.reduceat(slack_hi[idx], ptr[:-1])
    u0 = hier.project_primal(u)[hier.coarse_space.free_nodes]
    from .problems import BoxBounds
    return BoxBounds(u0 + lo, u0 + hi)


@dataclass
class CoarseProblem:
    """Augmented coarse objective with slack-projected bounds.

    energy(v0) = coarse energy(v0) + <correction, v0> where the linear
    correction makes the coarse gradient at the initial guess equal the
    restricted fine gradient.
    """

    base: object                    # coarse-level Problem
    correction: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    initial_guess_v0: np.ndarray

    @property
    def dim(self):
        return self.base.dim

    def energy(self, v0):
        return self.base.energy(v0) + self.correction @ v0

    def gradient(self, v0):
        return self.base.gradient(v0) + self.correction

    def hessian(self, v0):
        return self.base.hessian(v0)


def make_coarse_problem(problem, hier, v):
    """Assemble the augmented coarse problem around the fine iterate v."""
    u = problem.embed(v)
    v0 = hier.project_primal(u)[hier.coarse_space.free_nodes]
    fine_grad = problem.gradient(v)
    correction = hier.R0_free @ fine_grad - hier.coarse_problem.gradient(v0)
    cb = project_constraints(problem.bounds, v, hier)
    return CoarseProblem(hier.coarse_problem, correction, cb.lower, cb.upper, v0)


def coarse_step(problem, hier, v, inner_tol=1e-11, max_iter=100, ls_cfg=LS_DEFAULT):
    """Coarse half-step: solve the augmented coarse problem, prolongate the
    correction and line-search the fine energy along it.

    Returns (half-step iterate, info dict).  The result is clamped to the
    fine box, which the slack-projected coarse bounds already guarantee for
    any step size in [0, 1].
    """
    from .solvers import SolverConfig, newton_sqp_solve

    cp = make_coarse_problem(problem, hier, v)
    cfg = SolverConfig(outer_tol=inner_tol, inner_tol=inner_tol, max_outer=max_iter,
                       line_search=ls_cfg)
    v0_star, rec = newton_sqp_solve(cp, cp.initial_guess_v0, cfg)
    d = hier.P0_free @ (v0_star - cp.initial_guess_v0)
    info = {"coarse_iterations": rec.n_iterations, "alpha_hat": 0.0, "stalled": False}
    if not np.any(d):
        return v, info
    slope = problem.gradient(v) @ d
    ls = armijo(problem.energy, v, d, slope, ls_cfg)
    info["alpha_hat"] = ls.alpha
    info["stalled"] = ls.stalled
    if ls.stalled:
        return v, info
    v_half = np.clip(v + ls.alpha * d, problem.lower, problem.upper)
    return v_half, info
