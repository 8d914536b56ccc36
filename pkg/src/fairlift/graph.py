"""Weighted undirected graph with the adjacency primitives used everywhere else.

A :class:`Graph` is immutable after construction. Node ids from input files
are arbitrary strings; they are mapped to dense indices in first-appearance
order and all internal math runs on the dense indices.

Degree convention: a self-loop contributes twice to the weighted degree
``delta(u)``, so the total degree mass is conserved when matched node pairs
are collapsed into supernodes carrying the internal edge as a self-loop.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, IsolatedNode, MalformedId, NonPositiveWeight

__all__ = [
    "Graph",
    "build_graph",
    "normalized_adjacency",
    "parse_edge_list",
    "read_edge_list",
    "write_edge_list",
]


class Graph:
    """Immutable weighted undirected graph in CSR form.

    Attributes:
        n: node count; indices are dense in ``[0, n)``.
        indptr, indices, data: symmetric CSR arrays; the diagonal entry of a
            self-loop is stored once with its weight.
        degree: weighted degree per node, self-loops counted twice.
        node_names: external id per dense index, or ``None`` when nodes were
            created from dense indices directly.
    """

    __slots__ = ("n", "indptr", "indices", "data", "degree",
                 "edge_u", "edge_v", "edge_w", "node_names", "_name_index")

    def __init__(self, n: int, edge_u: np.ndarray, edge_v: np.ndarray,
                 edge_w: np.ndarray, node_names: list | None = None):
        # edge_u/edge_v/edge_w hold each unordered edge once with u <= v;
        # self-loops appear as u == v.
        self.n = int(n)
        self.edge_u = edge_u
        self.edge_v = edge_v
        self.edge_w = edge_w
        self.node_names = node_names
        self._name_index = (
            {name: i for i, name in enumerate(node_names)} if node_names is not None else None
        )

        both = edge_u != edge_v
        rows = np.concatenate([edge_u, edge_v[both]])
        cols = np.concatenate([edge_v, edge_u[both]])
        vals = np.concatenate([edge_w, edge_w[both]])
        adj = sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        adj.sort_indices()
        self.indptr = adj.indptr
        self.indices = adj.indices
        self.data = adj.data

        row_sums = np.asarray(adj.sum(axis=1)).ravel()
        loop = np.zeros(self.n)
        loops = ~both
        np.add.at(loop, edge_u[loops], edge_w[loops])
        self.degree = row_sums + loop

    # -- basic queries ---------------------------------------------------

    def neighbors(self, u: int) -> np.ndarray:
        """Indices adjacent to ``u`` (includes ``u`` itself on a self-loop)."""
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def neighbor_weights(self, u: int) -> np.ndarray:
        return self.data[self.indptr[u]:self.indptr[u + 1]]

    def weight(self, u: int, v: int) -> float:
        """Stored weight of (u, v); 0.0 when the edge is absent."""
        row = self.indices[self.indptr[u]:self.indptr[u + 1]]
        k = np.searchsorted(row, v)
        if k < row.size and row[k] == v:
            return float(self.data[self.indptr[u] + k])
        return 0.0

    @property
    def num_edges(self) -> int:
        """Unordered edge count, self-loops excluded."""
        return int(np.count_nonzero(self.edge_u != self.edge_v))

    @property
    def num_self_loops(self) -> int:
        return int(np.count_nonzero(self.edge_u == self.edge_v))

    @property
    def total_degree(self) -> float:
        return float(self.degree.sum())

    def name_of(self, u: int):
        return self.node_names[u] if self.node_names is not None else u

    def index_of(self, name: Hashable) -> int:
        if self._name_index is None:
            return int(name)
        return self._name_index[name]

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric CSR adjacency (self-loop weight on the diagonal once)."""
        return sp.csr_matrix(
            (self.data.copy(), self.indices.copy(), self.indptr.copy()),
            shape=(self.n, self.n),
        )

    def check_invariants(self, tol: float = 1e-12) -> None:
        """Assert symmetry and the cached-degree identity; used by tests."""
        adj = self.adjacency()
        asym = abs(adj - adj.T)
        if asym.nnz and asym.max() > tol:
            raise AssertionError("adjacency is not symmetric")
        recomputed = np.asarray(adj.sum(axis=1)).ravel() + adj.diagonal()
        if not np.allclose(recomputed, self.degree, rtol=0.0, atol=tol * max(1.0, float(self.degree.max(initial=1.0)))):
            raise AssertionError("cached degrees disagree with row sums")


def build_graph(edge_triples: Iterable[tuple], nodes: Sequence[Hashable] | None = None) -> Graph:
    """Build a graph from ``(u, v, w)`` triples.

    Duplicate entries of the same unordered pair are summed. Node ids map to
    dense indices in first-appearance order; ``nodes`` pre-registers ids (and
    is how isolated nodes enter the graph).

    Raises:
        NonPositiveWeight: some ``w <= 0`` or non-finite.
        MalformedId: an id is ``None``, empty, or contains whitespace (such
            ids cannot survive the whitespace-delimited edge-list format).
    """
    index: dict = {}
    names: list = []

    def intern(name) -> int:
        if name is None or (isinstance(name, str) and (name == "" or name.split() != [name])):
            raise MalformedId(f"bad node id: {name!r}")
        i = index.get(name)
        if i is None:
            i = len(names)
            index[name] = i
            names.append(name)
        return i

    if nodes is not None:
        for name in nodes:
            intern(name)

    acc: dict[tuple[int, int], float] = {}
    for u_id, v_id, w in edge_triples:
        w = float(w)
        if not np.isfinite(w) or w <= 0.0:
            raise NonPositiveWeight(f"edge ({u_id!r}, {v_id!r}) has weight {w}")
        u = intern(u_id)
        v = intern(v_id)
        key = (u, v) if u <= v else (v, u)
        acc[key] = acc.get(key, 0.0) + w

    n = len(names)
    if acc:
        eu = np.fromiter((k[0] for k in acc), count=len(acc), dtype=np.int64)
        ev = np.fromiter((k[1] for k in acc), count=len(acc), dtype=np.int64)
        ew = np.fromiter(acc.values(), count=len(acc), dtype=np.float64)
    else:
        eu = np.empty(0, dtype=np.int64)
        ev = np.empty(0, dtype=np.int64)
        ew = np.empty(0, dtype=np.float64)
    return Graph(n, eu, ev, ew, node_names=names)


def from_dense_edges(n: int, edge_u: np.ndarray, edge_v: np.ndarray, edge_w: np.ndarray) -> Graph:
    """Internal fast path: already-aggregated unordered edges on dense indices."""
    lo = np.minimum(edge_u, edge_v).astype(np.int64)
    hi = np.maximum(edge_u, edge_v).astype(np.int64)
    return Graph(n, lo, hi, np.asarray(edge_w, dtype=np.float64), node_names=None)


def normalized_adjacency(g: Graph, add_self_loops: bool = True) -> sp.csr_matrix:
    """Symmetric propagation matrix ``D^{-1/2} A D^{-1/2}``.

    With ``add_self_loops`` the identity is added first (the GCN
    renormalization trick); every row sum is then positive. Without it, a
    zero-degree row raises :class:`IsolatedNode`.
    """
    adj = g.adjacency()
    if add_self_loops:
        adj = (adj + sp.identity(g.n, format="csr")).tocsr()
    row_sums = np.asarray(adj.sum(axis=1)).ravel()
    if np.any(row_sums <= 0.0):
        bad = int(np.argmin(row_sums))
        raise IsolatedNode(f"node {bad} has zero row sum; enable self loops or connect it")
    d_inv_sqrt = 1.0 / np.sqrt(row_sums)
    scale = sp.diags(d_inv_sqrt)
    return (scale @ adj @ scale).tocsr()


# -- edge-list text format -----------------------------------------------
# One edge per line: `u v [w]`, whitespace separated, weight defaults to 1.0,
# lines starting with `#` are comments. Ids are arbitrary UTF-8 tokens.

def parse_edge_list(lines: Iterable[str]) -> list[tuple[str, str, float]]:
    triples = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise MalformedId(f"line {lineno}: expected 'u v [w]', got {line!r}")
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError as exc:
                raise MalformedId(f"line {lineno}: bad weight {parts[2]!r}") from exc
        triples.append((parts[0], parts[1], w))
    return triples


def read_edge_list(path, nodes: Sequence[Hashable] | None = None) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return build_graph(parse_edge_list(fh), nodes=nodes)


def write_edge_list(g: Graph, path) -> None:
    """Write each unordered edge once; floats use repr for lossless round-trips."""
    order = np.lexsort((g.edge_v, g.edge_u))
    with open(path, "w", encoding="utf-8") as fh:
        for k in order:
            u, v, w = int(g.edge_u[k]), int(g.edge_v[k]), float(g.edge_w[k])
            fh.write(f"{g.name_of(u)} {g.name_of(v)} {w!r}\n")
