"""The two benchmark energies and their bound constraints.

Both problems live on (0,1)^2 and minimize a nonlinear energy over nodal
functions confined to a box [lower, upper], with Dirichlet data eliminated
from the optimization (the solvers work on free nodes only).

ignition:
    f(u) = int  1/2 |grad u|^2 - (u e^u - e^u)  dx  -  int q(x) u dx,
    u = 0 on the whole boundary.  The 1/2 scopes over the gradient term only.

minimal_surface:
    f(u) = int sqrt(1 + |grad u|^2) dx,
    sine traces on the four boundary sides.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import mesh as msh
from .mesh import FeSpace, build_structured_mesh

IGNITION = "ignition"
MINIMAL_SURFACE = "minimal_surface"


class InfeasibleProblemError(ValueError):
    """Raised when the box constraints leave no feasible point."""


@dataclass
class BoxBounds:
    """Componentwise box: lower <= x <= upper."""

    lower: np.ndarray
    upper: np.ndarray

    def violation_indices(self):
        return np.flatnonzero(self.lower > self.upper)

    def is_feasible(self):
        return self.violation_indices().size == 0

    def restrict(self, idx):
        return BoxBounds(self.lower[idx], self.upper[idx])


def _ignition_forcing(x):
    x1, x2 = x[..., 0], x[..., 1]
    poly = x1 ** 2 - x1 ** 3
    return (9.0 * np.pi ** 2
            + np.exp(poly * np.sin(3.0 * np.pi * x2)) * poly
            + 6.0 * x1 - 2.0) * np.sin(3.0 * np.pi * x1)


def ignition_bounds(coords):
    x1, x2 = coords[:, 0], coords[:, 1]
    lower = 0.2 - 8.0 * (x1 - 7.0 / 16.0) ** 2 - 8.0 * (x2 - 7.0 / 16.0) ** 2
    upper = np.full(coords.shape[0], 0.5)
    return BoxBounds(lower, upper)


def minimal_surface_bounds(coords, upper_variant="bowl"):
    """Nodal bounds of the minimal-surface benchmark.

    upper_variant selects the sign of the second quadratic term of the upper
    bound: "bowl" (default) uses +8(x2-0.3)^2, "saddle" uses -8(x2-0.3)^2.
    The saddle variant dips below the lower bound around (0.7, 0.7) and is
    kept only for feasibility diagnostics.
    """
    x1, x2 = coords[:, 0], coords[:, 1]
    lower = 0.25 - 8.0 * (x1 - 0.7) ** 2 - 8.0 * (x2 - 0.7) ** 2
    sign = {"bowl": 1.0, "saddle": -1.0}[upper_variant]
    upper = 8.0 * (x1 - 0.3) ** 2 + sign * 8.0 * (x2 - 0.3) ** 2 - 0.4
    return BoxBounds(lower, upper)


def _zero(x):
    return np.zeros(x.shape[0])


_MINSURF_DATA = {
    msh.LEFT: lambda x: -0.3 * np.sin(2.0 * np.pi * x[:, 1]),
    msh.RIGHT: lambda x: 0.3 * np.sin(2.0 * np.pi * x[:, 1]),
    msh.BOTTOM: lambda x: -0.3 * np.sin(2.0 * np.pi * x[:, 0]),
    msh.TOP: lambda x: 0.3 * np.sin(2.0 * np.pi * x[:, 0]),
}


class Problem:
    """A bound-constrained nonlinear FE energy over free nodes.

    The solver-facing interface is energy/gradient/hessian as functions of
    the free-node vector v, plus the free-node box (lower, upper).
    """

    def __init__(self, kind, space, bounds, upper_variant="bowl"):
        if kind not in (IGNITION, MINIMAL_SURFACE):
            raise ValueError(f"unknown problem kind {kind!r}")
        self.kind = kind
        self.space = space
        self.bounds = bounds
        self.upper_variant = upper_variant
        self.lower = bounds.lower[space.free_nodes]
        self.upper = bounds.upper[space.free_nodes]
        geo = space.mesh.geometry
        if kind == IGNITION:
            self._forcing_q = _ignition_forcing(geo.quad_points)   # (T, 3)
        else:
            self._forcing_q = None

    # -- construction helpers ------------------------------------------------

    @property
    def dim(self):
        return self.space.n_free

    @property
    def mesh(self):
        return self.space.mesh

    def embed(self, v):
        return self.space.embed(v)

    def initial_guess(self):
        """Zero function projected into the box (Dirichlet data applied)."""
        return np.clip(np.zeros(self.dim), self.lower, self.upper)

    def with_resolution(self, cells):
        """The same problem discretized on a coarser/finer structured mesh."""
        return make_problem(self.kind, cells, upper_variant=self.upper_variant)

    # -- assembly over a triangle subset ------------------------------------

    def _element_state(self, u, tri_idx):
        geo = self.mesh.geometry
        if tri_idx is None:
            tris = self.mesh.triangles
            grads, areas, w = geo.basis_grads, geo.areas, geo.quad_weights
            fq = self._forcing_q
        else:
            tris = self.mesh.triangles[tri_idx]
            grads = geo.basis_grads[tri_idx]
            areas = geo.areas[tri_idx]
            w = geo.quad_weights[tri_idx]
            fq = None if self._forcing_q is None else self._forcing_q[tri_idx]
        ue = u[tris]                                     # (T, 3)
        grad_u = np.einsum("tid,ti->td", grads, ue)      # (T, 2)
        return tris, grads, areas, w, fq, ue, grad_u

    def _energy_full(self, u, tri_idx=None):
        tris, grads, areas, w, fq, ue, grad_u = self._element_state(u, tri_idx)
        bary = self.mesh.geometry.quad_bary
        if self.kind == IGNITION:
            uq = ue @ bary.T                             # (T, 3)
            exp_uq = np.exp(uq)
            e = 0.5 * areas * np.einsum("td,td->t", grad_u, grad_u)
            e += np.einsum("tq,tq->t", w, -(uq * exp_uq - exp_uq) - fq * uq)
            return float(e.sum())
        s = np.sqrt(1.0 + np.einsum("td,td->t", grad_u, grad_u))
        return float((areas * s).sum())

    def _gradient_full(self, u, tri_idx=None):
        """Assemble the full-length nodal gradient over the given triangles."""
        tris, grads, areas, w, fq, ue, grad_u = self._element_state(u, tri_idx)
        bary = self.mesh.geometry.quad_bary
        if self.kind == IGNITION:
            uq = ue @ bary.T
            contrib = areas[:, None] * np.einsum("tid,td->ti", grads, grad_u)
            contrib += (w * (-uq * np.exp(uq) - fq)) @ bary
        else:
            s = np.sqrt(1.0 + np.einsum("td,td->t", grad_u, grad_u))
            contrib = (areas / s)[:, None] * np.einsum("tid,td->ti", grads, grad_u)
        g = np.zeros(self.mesh.n_nodes)
        np.add.at(g, tris, contrib)
        return g

    def _hessian_full(self, u, tri_idx=None):
        """Assemble the full N-by-N Hessian over the given triangles (CSR)."""
        tris, grads, areas, w, fq, ue, grad_u = self._element_state(u, tri_idx)
        bary = self.mesh.geometry.quad_bary
        if self.kind == IGNITION:
            uq = ue @ bary.T
            blocks = areas[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
            weight = w * (-(1.0 + uq) * np.exp(uq))
            blocks += np.einsum("tq,qi,qj->tij", weight, bary, bary)
        else:
            s2 = 1.0 + np.einsum("td,td->t", grad_u, grad_u)
            s = np.sqrt(s2)
            gp = np.einsum("tid,td->ti", grads, grad_u)  # (T, 3)
            blocks = (areas / s)[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
            blocks -= (areas / (s2 * s))[:, None, None] * np.einsum("ti,tj->tij", gp, gp)
        n = self.mesh.n_nodes
        rows = np.repeat(tris, 3, axis=1).ravel()
        cols = np.tile(tris, (1, 3)).ravel()
        H = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n))
        return H.tocsr()

    # -- solver-facing interface over free nodes -----------------------------

    def energy(self, v):
        return self._energy_full(self.embed(v))

    def gradient(self, v):
        return self._gradient_full(self.embed(v))[self.space.free_nodes]

    def hessian(self, v):
        H = self._hessian_full(self.embed(v))
        free = self.space.free_nodes
        return H[free][:, free]

    def restricted(self, idx, v):
        """Subproblem over the free-node subset idx with the rest frozen at v.

        Only triangles touching the subset contribute to its derivatives, so
        assembly runs over that subset; the remaining triangles enter the
        energy as a constant offset.
        """
        return _FeSubproblem(self, np.asarray(idx, dtype=np.int64), np.asarray(v, dtype=float))


class _FeSubproblem:
    """Restriction of a Problem to a free-node subset with frozen exterior."""

    def __init__(self, problem, idx, v_frozen):
        self.problem = problem
        self.idx = idx
        self.full_idx = problem.space.free_nodes[idx]
        self.lower = problem.lower[idx]
        self.upper = problem.upper[idx]
        self._u_base = problem.embed(v_frozen)
        mesh = problem.mesh
        in_subset = np.zeros(mesh.n_nodes, dtype=bool)
        in_subset[self.full_idx] = True
        touching = in_subset[mesh.triangles].any(axis=1)
        self.tri_idx = np.flatnonzero(touching)
        rest = np.flatnonzero(~touching)
        self._energy_offset = problem._energy_full(self._u_base, rest)

    @property
    def dim(self):
        return self.idx.size

    def _compose(self, w):
        u = self._u_base.copy()
        u[self.full_idx] = w
        return u

    def energy(self, w):
        return self.problem._energy_full(self._compose(w), self.tri_idx) + self._energy_offset

    def gradient(self, w):
        g = self.problem._gradient_full(self._compose(w), self.tri_idx)
        return g[self.full_idx]

    def hessian(self, w):
        H = self.problem._hessian_full(self._compose(w), self.tri_idx)
        return H[self.full_idx][:, self.full_idx]


def make_problem(kind, cells, upper_variant="bowl"):
    """Build one of the benchmark problems on an n-by-n structured mesh."""
    mesh = build_structured_mesh(cells)
    if kind == IGNITION:
        data = {tag: _zero for tag in (msh.LEFT, msh.RIGHT, msh.BOTTOM, msh.TOP)}
        space = FeSpace(mesh, data)
        bounds = ignition_bounds(mesh.nodes)
    elif kind == MINIMAL_SURFACE:
        space = FeSpace(mesh, _MINSURF_DATA)
        bounds = minimal_surface_bounds(mesh.nodes, upper_variant)
    else:
        raise ValueError(f"unknown problem kind {kind!r}")
    return Problem(kind, space, bounds, upper_variant)


def ignition_problem(cells=120):
    return make_problem(IGNITION, cells)


def minimal_surface_problem(cells=120, upper_variant="bowl"):
    return make_problem(MINIMAL_SURFACE, cells, upper_variant)


def evaluate_bounds(problem):
    """Nodal bounds of the problem; raises if the box is empty anywhere."""
    if not problem.bounds.is_feasible():
        bad = problem.bounds.violation_indices()
        raise InfeasibleProblemError(
            f"lower bound exceeds upper bound at {bad.size} nodes (first: {bad[:5]})")
    return problem.bounds


@dataclass
class FeasibilityReport:
    feasible: bool
    empty_box_nodes: np.ndarray
    dirichlet_violation_nodes: np.ndarray

    def __str__(self):
        if self.feasible:
            return "feasible"
        return (f"infeasible: {self.empty_box_nodes.size} empty-box nodes, "
                f"{self.dirichlet_violation_nodes.size} out-of-bounds Dirichlet nodes")


def validate_feasibility(problem):
    """Check lower <= upper everywhere and Dirichlet data within the box."""
    bounds = problem.bounds
    empty = bounds.violation_indices()
    space = problem.space
    mask = space.dirichlet_mask
    vals = space.dirichlet_values
    bad = mask & ((vals < bounds.lower) | (vals > bounds.upper))
    dirichlet_bad = np.flatnonzero(bad)
    return FeasibilityReport(empty.size == 0 and dirichlet_bad.size == 0,
                             empty, dirichlet_bad)
