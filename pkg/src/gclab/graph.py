"""Immutable undirected sparse graphs in CSR form and their linear operators.

The graph is the read-only substrate for everything else: samplers induce
subgraphs from it, smoothing mixes matrix rows along its edges, and the GCN
propagates features with its symmetrically normalized adjacency.

Conventions
-----------
- No stored self-loops, no duplicate edges; adjacency lists sorted ascending.
- ``num_edges`` counts undirected edges; the CSR arrays store both directions.
- Hop distances use ``UNREACHABLE`` (-1) as the sentinel for disconnection.
- The neighborhood-mean operator maps isolated nodes to the zero row, so the
  random-walk Laplacian acts as zero there and isolated values pass through
  smoothing filters unchanged.
"""
from __future__ import annotations

from collections.abc import Iterable

import numpy as np
import scipy.sparse as sp

UNREACHABLE = -1


class Graph:
    """Undirected graph stored as a CSR adjacency structure.

    Attributes
    ----------
    num_nodes : int
    num_edges : int
        Undirected edge count (half the stored directed arcs).
    offsets : (num_nodes + 1,) int64 array
        CSR row pointers.
    neighbors : int64 array
        Concatenated sorted adjacency lists.

    Instances are immutable: the arrays are marked read-only and the sparse
    operators derived from them are cached per dtype, which makes a Graph
    safe to share across concurrent workers.
    """

    __slots__ = ("num_nodes", "num_edges", "offsets", "neighbors", "_cache")

    def __init__(self, num_nodes: int, offsets: np.ndarray, neighbors: np.ndarray):
        offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        neighbors = np.ascontiguousarray(neighbors, dtype=np.int64)
        if offsets.shape != (num_nodes + 1,):
            raise ValueError(f"offsets must have length {num_nodes + 1}, got {offsets.shape}")
        if offsets[0] != 0 or offsets[-1] != neighbors.size:
            raise ValueError("offsets must start at 0 and end at len(neighbors)")
        if np.any(np.diff(offsets) < 0):
            raise ValueError("offsets must be nondecreasing")
        offsets.flags.writeable = False
        neighbors.flags.writeable = False
        self.num_nodes = int(num_nodes)
        self.num_edges = neighbors.size // 2
        self.offsets = offsets
        self.neighbors = neighbors
        self._cache: dict = {}

    # -- basic accessors ---------------------------------------------------

    @property
    def degrees(self) -> np.ndarray:
        if "degrees" not in self._cache:
            deg = np.diff(self.offsets)
            deg.flags.writeable = False
            self._cache["degrees"] = deg
        return self._cache["degrees"]

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.neighbors[self.offsets[u] : self.offsets[u + 1]]

    def edge_list(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array with u < v, sorted."""
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        mask = rows < self.neighbors
        return np.column_stack([rows[mask], self.neighbors[mask]])

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors_of(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def same_structure(self, other: "Graph") -> bool:
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.neighbors, other.neighbors)
        )

    def __repr__(self) -> str:
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"

    # -- cached sparse operators --------------------------------------------

    def adjacency(self, dtype=np.float64) -> sp.csr_matrix:
        """Unweighted adjacency A as scipy CSR."""
        key = ("adj", np.dtype(dtype).str)
        if key not in self._cache:
            data = np.ones(self.neighbors.size, dtype=dtype)
            self._cache[key] = sp.csr_matrix(
                (data, self.neighbors, self.offsets), shape=(self.num_nodes, self.num_nodes)
            )
        return self._cache[key]

    def mean_neighbor_operator(self, dtype=np.float64) -> sp.csr_matrix:
        """D^-1 A with all-zero rows at isolated nodes."""
        key = ("mean", np.dtype(dtype).str)
        if key not in self._cache:
            deg = self.degrees
            inv = np.zeros(self.num_nodes, dtype=dtype)
            np.divide(1.0, deg, out=inv, where=deg > 0, dtype=dtype)
            data = np.repeat(inv, deg)
            self._cache[key] = sp.csr_matrix(
                (data, self.neighbors, self.offsets), shape=(self.num_nodes, self.num_nodes)
            )
        return self._cache[key]

    def sym_norm_operator(self, dtype=np.float64) -> sp.csr_matrix:
        """D~^-1/2 (A + I) D~^-1/2 where D~ counts the added self-loops."""
        key = ("symnorm", np.dtype(dtype).str)
        if key not in self._cache:
            a_hat = self.adjacency(dtype) + sp.identity(self.num_nodes, dtype=dtype, format="csr")
            a_hat.sort_indices()
            scale = 1.0 / np.sqrt((self.degrees + 1).astype(dtype))
            d_half = sp.diags(scale)
            op = (d_half @ a_hat @ d_half).tocsr()
            op.sort_indices()
            self._cache[key] = op
        return self._cache[key]


def build_graph(edges: Iterable[tuple[int, int]], n: int) -> Graph:
    """Build an undirected graph from an edge list.

    Self-loops are dropped, duplicates and reversed copies merged, and the
    result symmetrized.

    Raises
    ------
    ValueError
        If ``n`` is not positive or any endpoint is outside ``[0, n)``.
    """
    if n <= 0:
        raise ValueError(f"node count must be positive, got {n}")
    arr = np.asarray(list(edges), dtype=np.int64)
    if arr.size == 0:
        return Graph(n, np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64))
    arr = arr.reshape(-1, 2)
    if arr.min() < 0 or arr.max() >= n:
        bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
        raise ValueError(f"edge ({bad[0]}, {bad[1]}) out of range for n={n}")
    arr = arr[arr[:, 0] != arr[:, 1]]
    if arr.size == 0:
        return Graph(n, np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64))
    both = np.concatenate([arr, arr[:, ::-1]])
    codes = np.unique(both[:, 0] * n + both[:, 1])
    src = codes // n
    dst = codes % n
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    return Graph(n, offsets, dst)


def bfs_distances(g: Graph, source: int, cutoff: int | None = None) -> np.ndarray:
    """Hop distances from ``source``; unreachable nodes get ``UNREACHABLE``.

    With a ``cutoff``, exploration stops after that many hops and anything
    farther keeps the sentinel.
    """
    if not 0 <= source < g.num_nodes:
        raise ValueError(f"source {source} out of range for n={g.num_nodes}")
    dist = np.full(g.num_nodes, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    d = 0
    while frontier.size and (cutoff is None or d < cutoff):
        nxt = np.unique(
            np.concatenate([g.neighbors_of(u) for u in frontier])
            if frontier.size > 1
            else g.neighbors_of(frontier[0])
        )
        nxt = nxt[dist[nxt] == UNREACHABLE]
        d += 1
        dist[nxt] = d
        frontier = nxt
    return dist


def bfs_ball(g: Graph, source: int, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes within ``radius`` hops of ``source`` and their distances.

    Returns (ids, dists) sorted by node id; only touches the visited ball,
    so it stays cheap on large graphs with small radii.
    """
    found = {source: 0}
    frontier = [source]
    for d in range(1, radius + 1):
        nxt = []
        for u in frontier:
            for v in g.neighbors_of(u):
                v = int(v)
                if v not in found:
                    found[v] = d
                    nxt.append(v)
        if not nxt:
            break
        frontier = nxt
    ids = np.fromiter(found.keys(), dtype=np.int64, count=len(found))
    dists = np.fromiter(found.values(), dtype=np.int64, count=len(found))
    order = np.argsort(ids)
    return ids[order], dists[order]


def _check_rows(g: Graph, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.shape[0] != g.num_nodes:
        raise ValueError(f"matrix has {m.shape[0]} rows, graph has {g.num_nodes} nodes")
    if not np.issubdtype(m.dtype, np.floating):
        m = m.astype(np.float64)
    return m


def rw_laplacian_apply(g: Graph, m: np.ndarray) -> np.ndarray:
    """Apply L = D^-1 A - I row-wise: neighborhood mean minus own value.

    Rows of isolated nodes map to zero, so constants are in the kernel on
    connected graphs and isolated values are left untouched by filters built
    from L. Accepts (N, D) matrices or (N,) vectors.
    """
    m = _check_rows(g, m)
    vec = m.ndim == 1
    cols = m.reshape(g.num_nodes, -1)
    out = g.mean_neighbor_operator(cols.dtype) @ cols
    out -= cols
    iso = g.degrees == 0
    if iso.any():
        out[iso] = 0
    return out.reshape(-1) if vec else out


def sym_norm_propagate(g: Graph, m: np.ndarray) -> np.ndarray:
    """One step of symmetrically normalized propagation with self-loops."""
    m = _check_rows(g, m)
    vec = m.ndim == 1
    cols = m.reshape(g.num_nodes, -1)
    out = g.sym_norm_operator(cols.dtype) @ cols
    return out.reshape(-1) if vec else out


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> tuple[Graph, np.ndarray]:
    """Subgraph on a node set, plus the local -> global id mapping.

    Local ids follow ascending global id order. The subgraph contains exactly
    the edges of ``g`` with both endpoints in the set.
    """
    ids = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64))
    if ids.size == 0:
        raise ValueError("node set must be nonempty")
    if ids[0] < 0 or ids[-1] >= g.num_nodes:
        raise ValueError(f"node ids out of range for n={g.num_nodes}")
    lookup = np.full(g.num_nodes, -1, dtype=np.int64)
    lookup[ids] = np.arange(ids.size)
    rows = []
    counts = np.empty(ids.size, dtype=np.int64)
    for local, u in enumerate(ids):
        nb = lookup[g.neighbors_of(u)]
        nb = nb[nb >= 0]
        rows.append(nb)
        counts[local] = nb.size
    offsets = np.zeros(ids.size + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    neighbors = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    return Graph(ids.size, offsets, neighbors), ids


def connected_components(g: Graph) -> tuple[np.ndarray, int]:
    """Component label per node and the number of components."""
    labels = np.full(g.num_nodes, -1, dtype=np.int64)
    count = 0
    for s in range(g.num_nodes):
        if labels[s] >= 0:
            continue
        labels[s] = count
        frontier = np.array([s], dtype=np.int64)
        while frontier.size:
            nxt = np.unique(
                np.concatenate([g.neighbors_of(u) for u in frontier])
                if frontier.size > 1
                else g.neighbors_of(frontier[0])
            )
            nxt = nxt[labels[nxt] < 0]
            labels[nxt] = count
            frontier = nxt
        count += 1
    return labels, count
