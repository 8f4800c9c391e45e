"""Structured triangular meshes on the unit square and the P1 nodal space.

The mesh is an n-by-n grid of squares, each split along the bottom-left to
top-right diagonal.  Nodes are numbered lexicographically by (row, column),
i.e. node (ix, iy) has index iy*(n+1) + ix and coordinates (ix*h, iy*h).
"""

from functools import cached_property

import numpy as np

INTERIOR = "interior"
LEFT = "left"      # x1 = 0
RIGHT = "right"    # x1 = 1
BOTTOM = "bottom"  # x2 = 0
TOP = "top"        # x2 = 1

# corner ownership: first matching side in this order wins
_SIDE_PRIORITY = (LEFT, RIGHT, BOTTOM, TOP)

# 3-point edge-midpoint rule, exact for degree-2 polynomials on a triangle.
# Rows are quadrature points, columns are barycentric coordinates.
_QUAD_BARY = np.array([
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
])
_QUAD_WEIGHTS = np.array([1.0, 1.0, 1.0]) / 3.0


class Mesh:
    """Immutable structured triangulation of (0,1)^2.

    Attributes
    ----------
    cells_per_side : int
        Number of squares per coordinate direction.
    nodes : (N, 2) float array
        Node coordinates, N = (cells_per_side+1)^2.
    triangles : (T, 3) int array
        Node index triples with positive orientation, T = 2*cells_per_side^2.
    boundary_tag : list of str
        Per-node tag: "interior" or the owning side.
    """

    def __init__(self, cells_per_side, nodes, triangles, boundary_tag):
        self.cells_per_side = cells_per_side
        self.nodes = nodes
        self.triangles = triangles
        self.boundary_tag = boundary_tag
        nodes.setflags(write=False)
        triangles.setflags(write=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def h(self):
        return 1.0 / self.cells_per_side

    @cached_property
    def geometry(self):
        """Per-triangle quantities used by P1 assembly."""
        return _P1Geometry(self)

    def node_index(self, ix, iy):
        return iy * (self.cells_per_side + 1) + ix


class _P1Geometry:
    """Areas, constant basis gradients and quadrature data per triangle."""

    def __init__(self, mesh):
        tri = mesh.triangles
        p = mesh.nodes[tri]                     # (T, 3, 2)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self.areas = 0.5 * det
        if np.any(self.areas <= 0.0):
            raise ValueError("mesh contains non-positively oriented triangles")
        # gradients of barycentric coordinates (constant on each triangle)
        inv_det = 1.0 / det
        g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) * inv_det[:, None]
        g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) * inv_det[:, None]
        g0 = -(g1 + g2)
        self.basis_grads = np.stack([g0, g1, g2], axis=1)    # (T, 3, 2)
        # physical quadrature points and weights
        self.quad_points = np.einsum("qi,tid->tqd", _QUAD_BARY, p)   # (T, 3, 2)
        self.quad_weights = self.areas[:, None] * _QUAD_WEIGHTS[None, :]
        self.quad_bary = _QUAD_BARY
        for a in (self.areas, self.basis_grads, self.quad_points, self.quad_weights):
            a.setflags(write=False)


def classify_boundary(nodes, tol=0.0):
    """Tag every node with the boundary part it belongs to.

    Corner nodes lie on two sides and are assigned to the first matching side
    in the fixed order (left, right, bottom, top).
    """
    x, y = nodes[:, 0], nodes[:, 1]
    tags = []
    for xi, yi in zip(x, y):
        if xi <= tol:
            tags.append(LEFT)
        elif xi >= 1.0 - tol:
            tags.append(RIGHT)
        elif yi <= tol:
            tags.append(BOTTOM)
        elif yi >= 1.0 - tol:
            tags.append(TOP)
        else:
            tags.append(INTERIOR)
    return tags


def build_structured_mesh(n):
    """Build the uniform n-by-n mesh of (0,1)^2 split into 2*n^2 triangles.

    Every square is split along the bottom-left to top-right diagonal, so
    rebuilding the same size yields identical node and triangle arrays.
    """
    if n < 1:
        raise ValueError(f"cells per side must be >= 1, got {n}")
    coords_1d = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords_1d, coords_1d)          # row-major: y outer
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    ix, iy = np.meshgrid(np.arange(n), np.arange(n))
    bl = (iy * (n + 1) + ix).ravel()
    br = bl + 1
    tl = bl + (n + 1)
    tr = tl + 1
    lower = np.column_stack([bl, br, tr])
    upper = np.column_stack([bl, tr, tl])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    tags = classify_boundary(nodes)
    return Mesh(n, nodes, triangles, tags)


def element_quadrature(mesh, t):
    """Return (points, weights) of the degree-2 rule on triangle t.

    Weights sum to the triangle area; the rule integrates quadratics exactly.
    """
    geo = mesh.geometry
    return geo.quad_points[t], geo.quad_weights[t]


class FeSpace:
    """P1 space on a mesh with Dirichlet data prescribed on the boundary.

    Parameters
    ----------
    mesh : Mesh
    boundary_data : dict mapping side tag -> callable(x) -> value
        Sides not present in the dict are left free.  A node tagged with a
        side in the dict becomes a Dirichlet node.
    """

    def __init__(self, mesh, boundary_data):
        self.mesh = mesh
        self.boundary_data = dict(boundary_data)
        tags = np.array(mesh.boundary_tag)
        dirichlet = np.zeros(mesh.n_nodes, dtype=bool)
        values = np.zeros(mesh.n_nodes)
        for tag, fn in self.boundary_data.items():
            sel = tags == tag
            dirichlet |= sel
            if np.any(sel):
                values[sel] = np.asarray(fn(mesh.nodes[sel]), dtype=float)
        self.dirichlet_mask = dirichlet
        self.dirichlet_values = values      # zero on free nodes
        self.free_nodes = np.flatnonzero(~dirichlet)
        # inverse map: full node index -> free index, -1 for Dirichlet nodes
        self.free_index = np.full(mesh.n_nodes, -1, dtype=np.int64)
        self.free_index[self.free_nodes] = np.arange(self.free_nodes.size)
        for a in (self.dirichlet_mask, self.dirichlet_values,
                  self.free_nodes, self.free_index):
            a.setflags(write=False)

    @property
    def n_free(self):
        return self.free_nodes.size

    def embed(self, v):
        """Full nodal vector from free values, Dirichlet data filled in."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_free,):
            raise ValueError(f"expected {self.n_free} free values, got {v.shape}")
        u = self.dirichlet_values.copy()
        u[self.free_nodes] = v
        return u

    def extract(self, u):
        """Free values of a full nodal vector."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.mesh.n_nodes,):
            raise ValueError(f"expected {self.mesh.n_nodes} nodal values, got {u.shape}")
        return u[self.free_nodes]
