"""Partitioning of the free nodes, overlap extension, transfer operators and
extraction of frozen-exterior local subproblems.

All index sets live in free-node numbering.  The nonoverlapping (owned) sets
partition the free nodes exactly; the overlapping sets extend each owned set
by a number of breadth-first layers of the node-adjacency graph, one layer
per mesh width.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class PartitionError(ValueError):
    """Raised for invalid or unbalanced partitions."""


@dataclass
class Decomposition:
    n_subdomains: int
    overlap: int
    owned: list                     # nonoverlapping free-node sets (sorted arrays)
    overlapping: list               # overlapping free-node sets (sorted arrays)
    n_free: int
    owner: np.ndarray = field(init=False)
    owned_pos: list = field(init=False)

    def __post_init__(self):
        owner = np.full(self.n_free, -1, dtype=np.int64)
        for i, idx in enumerate(self.owned):
            if np.any(owner[idx] >= 0):
                raise PartitionError("owned sets are not disjoint")
            owner[idx] = i
        if np.any(owner < 0):
            raise PartitionError("owned sets do not cover all free nodes")
        self.owner = owner
        # positions of the owned nodes inside each overlapping set
        self.owned_pos = []
        for own, ov in zip(self.owned, self.overlapping):
            pos = np.searchsorted(ov, own)
            if not np.array_equal(ov[pos], own):
                raise PartitionError("owned set escapes its overlapping set")
            self.owned_pos.append(pos)


def free_adjacency(space):
    """Boolean node-adjacency matrix of the free nodes (CSR, no diagonal)."""
    tris = space.mesh.triangles
    fi = space.free_index[tris]                        # (T, 3), -1 for Dirichlet
    rows, cols = [], []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        ra, rb = fi[:, a], fi[:, b]
        keep = (ra >= 0) & (rb >= 0)
        rows.append(ra[keep])
        cols.append(rb[keep])
        rows.append(rb[keep])
        cols.append(ra[keep])
    n = space.n_free
    A = sp.coo_matrix((np.ones(sum(r.size for r in rows), dtype=bool),
                       (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A.tocsr()


def partition(space, n):
    """Recursive coordinate bisection of the free nodes into n balanced sets.

    Splits are along the coordinate with the larger extent at proportional
    counts, with deterministic index tie-breaking.
    """
    n_free = space.n_free
    if n < 1 or n > n_free:
        raise PartitionError(f"cannot split {n_free} free nodes into {n} subdomains")
    coords = space.mesh.nodes[space.free_nodes]

    def bisect(idx, parts):
        if parts == 1:
            return [np.sort(idx)]
        extent = coords[idx].max(axis=0) - coords[idx].min(axis=0)
        axis = int(np.argmax(extent))
        order = idx[np.lexsort((idx, coords[idx, 1 - axis], coords[idx, axis]))]
        left_parts = parts // 2
        cut = int(round(idx.size * left_parts / parts))
        cut = min(max(cut, left_parts), idx.size - (parts - left_parts))
        return bisect(order[:cut], left_parts) + bisect(order[cut:], parts - left_parts)

    sets = bisect(np.arange(n_free), n)
    sizes = np.array([s.size for s in sets])
    if sizes.min() == 0:
        raise PartitionError("partition produced an empty subdomain")
    return sets


def extend_overlap(sets, adjacency, delta):
    """Grow each set by delta breadth-first layers of the adjacency graph."""
    if delta < 0:
        raise ValueError("overlap must be nonnegative")
    n = adjacency.shape[0]
    out = []
    for idx in sets:
        mask = np.zeros(n, dtype=bool)
        mask[idx] = True
        for _ in range(delta):
            grown = adjacency @ mask
            new = mask | grown
            if np.array_equal(new, mask):
                break
            mask = new
        out.append(np.flatnonzero(mask))
    return out


def build_decomposition(space, n, delta, owned_sets=None):
    """Partition, extend and package a decomposition of the free nodes."""
    if owned_sets is None:
        owned_sets = partition(space, n)
    adjacency = free_adjacency(space)
    overlapping = extend_overlap(owned_sets, adjacency, delta)
    return Decomposition(len(owned_sets), delta, owned_sets, overlapping, space.n_free)


@dataclass
class TransferOperators:
    """Sparse R_i / P_i / restricted P_i matrices of a decomposition."""

    decomposition: Decomposition

    def restriction(self, i):
        """R_i: selects the overlapping-set entries."""
        idx = self.decomposition.overlapping[i]
        n = self.decomposition.n_free
        return sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)),
                             shape=(idx.size, n))

    def prolongation(self, i):
        """P_i = R_i^T: scatters overlapping-set entries."""
        return self.restriction(i).T.tocsr()

    def restricted_prolongation(self, i):
        """Scatters only the owned entries; sum over i of P~_i R_i = I."""
        d = self.decomposition
        idx = d.overlapping[i]
        pos = d.owned_pos[i]
        rows = d.owned[i]
        return sp.csr_matrix((np.ones(rows.size), (rows, pos)),
                             shape=(d.n_free, idx.size))


def build_transfer(decomposition):
    return TransferOperators(decomposition)


class FrozenSubproblem:
    """Generic frozen-exterior restriction of a bound-constrained objective.

    Evaluates the global objective at the composite vector (local values on
    the subset, frozen iterate elsewhere).  FE problems provide a faster
    element-subset path through their own ``restricted`` method.
    """

    def __init__(self, objective, idx, v_frozen):
        self.objective = objective
        self.idx = np.asarray(idx, dtype=np.int64)
        self.v_frozen = np.asarray(v_frozen, dtype=float)
        self.lower = objective.lower[self.idx]
        self.upper = objective.upper[self.idx]

    @property
    def dim(self):
        return self.idx.size

    def _compose(self, w):
        v = self.v_frozen.copy()
        v[self.idx] = w
        return v

    def energy(self, w):
        return self.objective.energy(self._compose(w))

    def gradient(self, w):
        return self.objective.gradient(self._compose(w))[self.idx]

    def hessian(self, w):
        H = self.objective.hessian(self._compose(w))
        if sp.issparse(H):
            return H[self.idx][:, self.idx]
        return np.asarray(H)[np.ix_(self.idx, self.idx)]


def extract_local(objective, decomposition, i, v):
    """Local problem on subdomain i with the exterior frozen at v."""
    idx = decomposition.overlapping[i]
    if hasattr(objective, "restricted"):
        return objective.restricted(idx, v)
    return FrozenSubproblem(objective, idx, v)


def load_partition_file(path, n_free):
    """Read an explicit node-to-subdomain assignment.

    Plain text, one whitespace-separated ``node_index subdomain_index`` pair
    per free node.  The assignment must cover every free node exactly once.
    """
    data = np.loadtxt(path, dtype=np.int64, ndmin=2)
    if data.shape[1] != 2:
        raise PartitionError("partition file must have two columns")
    nodes, subs = data[:, 0], data[:, 1]
    if nodes.size != n_free or np.unique(nodes).size != n_free \
            or nodes.min() < 0 or nodes.max() >= n_free:
        raise PartitionError("partition file must assign each free node exactly once")
    if subs.min() < 0:
        raise PartitionError("negative subdomain index in partition file")
    n = int(subs.max()) + 1
    sets = [np.sort(nodes[subs == i]) for i in range(n)]
    if any(s.size == 0 for s in sets):
        raise PartitionError("partition file leaves an empty subdomain")
    return sets
