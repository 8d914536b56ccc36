"""Fairness-aware multi-level coarsening.

Each round pairs nodes greedily: visiting nodes by increasing degree, an
unmatched node grabs the unmatched neighbor that maximizes a blend of
normalized edge weight (which penalizes hubs) and attribute divergence
(which favors merging demographically different nodes, diluting the
sensitive signal at coarse levels). Matched pairs collapse into supernodes
whose attribute rows are the sums of their children's.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .attributes import (AttributeMatrix, merge_rows, pairwise_divergence,
                         read_attribute_matrix, write_attribute_matrix)
from .errors import InputError
from .graph import Graph, from_dense_edges, read_edge_list, write_edge_list

__all__ = [
    "Matching",
    "MergeMap",
    "Hierarchy",
    "nhem_weight",
    "match_nodes",
    "build_coarse_graph",
    "coarsen_hierarchy",
    "save_hierarchy",
    "load_hierarchy",
]


@dataclass
class Matching:
    """Partition of the nodes into groups of size 1 or 2, in creation order."""

    groups: list[tuple[int, ...]]

    def parent_array(self, n: int) -> np.ndarray:
        parent = np.full(n, -1, dtype=np.int64)
        for gid, members in enumerate(self.groups):
            for u in members:
                if not 0 <= u < n or parent[u] != -1:
                    raise InputError("matching is not a partition of the nodes")
            for u in members:
                parent[u] = gid
        if np.any(parent < 0):
            raise InputError("matching does not cover every node")
        return parent


@dataclass
class MergeMap:
    """Fine-node to coarse-node index map; parents numbered in creation order."""

    child_to_parent: np.ndarray

    @property
    def n_fine(self) -> int:
        return self.child_to_parent.shape[0]

    @property
    def n_coarse(self) -> int:
        return int(self.child_to_parent.max()) + 1 if self.n_fine else 0


@dataclass
class Hierarchy:
    """c+1 levels of (graph, attributes) plus the merge map between each pair.

    Level 0 is the input graph; level c is the coarsest.
    """

    graphs: list[Graph]
    attrs: list[AttributeMatrix]
    merges: list[MergeMap]
    lambda_c: float

    @property
    def c(self) -> int:
        return len(self.graphs) - 1

    @property
    def coarsest(self) -> tuple[Graph, AttributeMatrix]:
        return self.graphs[-1], self.attrs[-1]


def nhem_weight(g: Graph, u: int, v: int) -> float:
    """Edge weight normalized by endpoint degrees: A[u][v] / sqrt(d(u) d(v))."""
    w = g.weight(u, v)
    if w == 0.0:
        raise InputError(f"no edge between {u} and {v}")
    return w / np.sqrt(g.degree[u] * g.degree[v])


def match_nodes(g: Graph, S: AttributeMatrix, lambda_c: float) -> Matching:
    """Greedy degree-ordered matching maximizing
    (1 - lambda_c) * normalized weight + lambda_c * divergence."""
    if not 0.0 <= lambda_c <= 1.0:
        raise InputError("lambda_c must lie in [0, 1]")
    if S.n != g.n:
        raise InputError("attribute row count does not match graph")
    matched = np.zeros(g.n, dtype=bool)
    groups: list[tuple[int, ...]] = []
    # stable sort: degree ties resolve by ascending node index
    order = np.argsort(g.degree, kind="stable")
    inv_sqrt_deg = np.zeros(g.n)
    pos = g.degree > 0
    inv_sqrt_deg[pos] = 1.0 / np.sqrt(g.degree[pos])
    for u in order:
        if matched[u]:
            continue
        nbrs = g.neighbors(u)
        weights = g.neighbor_weights(u)
        keep = (nbrs != u) & ~matched[nbrs]
        nbrs = nbrs[keep]
        if nbrs.size == 0:
            matched[u] = True
            groups.append((int(u),))
            continue
        weights = weights[keep]
        w_norm = weights * inv_sqrt_deg[u] * inv_sqrt_deg[nbrs]
        score = (1.0 - lambda_c) * w_norm
        if lambda_c > 0.0:
            phi = pairwise_divergence(S.S, np.full(nbrs.size, u, dtype=np.int64), nbrs)
            score = score + lambda_c * phi
        # neighbor indices ascend, so argmax keeps the smallest v on ties
        v = int(nbrs[np.argmax(score)])
        matched[u] = matched[v] = True
        groups.append((int(u), v))
    return Matching(groups)


def build_coarse_graph(g: Graph, S: AttributeMatrix,
                       m: Matching) -> tuple[Graph, AttributeMatrix, MergeMap]:
    """Collapse each matched group into one supernode.

    Coarse edge weights sum the child edges they absorb; edges internal to a
    group (the collapsed edge plus inherited self-loops) become the
    supernode's self-loop, so total degree is conserved. Attribute rows are
    summed per group.
    """
    parent = m.parent_array(g.n)
    for members in m.groups:
        if len(members) == 2 and g.weight(members[0], members[1]) == 0.0:
            raise InputError(f"matched pair {members} is not an edge")
        if len(members) not in (1, 2):
            raise InputError("groups must have size 1 or 2")
    n_coarse = len(m.groups)

    pu = parent[g.edge_u]
    pv = parent[g.edge_v]
    lo = np.minimum(pu, pv)
    hi = np.maximum(pu, pv)
    key = lo * np.int64(n_coarse) + hi
    uniq, inverse = np.unique(key, return_inverse=True)
    weights = np.zeros(uniq.size)
    np.add.at(weights, inverse, g.edge_w)
    g_coarse = from_dense_edges(n_coarse, uniq // n_coarse, uniq % n_coarse, weights)

    S_coarse = np.zeros((n_coarse, S.m))
    np.add.at(S_coarse, parent, S.S)
    attrs_coarse = AttributeMatrix(S_coarse, S.schema)
    return g_coarse, attrs_coarse, MergeMap(parent)


def coarsen_hierarchy(g0: Graph, S0: AttributeMatrix, c: int,
                      lambda_c: float) -> Hierarchy:
    """Apply match+collapse ``c`` times, recording every level."""
    if c < 0:
        raise InputError("coarsen level c must be >= 0")
    graphs = [g0]
    attrs = [S0]
    merges: list[MergeMap] = []
    for _ in range(c):
        m = match_nodes(graphs[-1], attrs[-1], lambda_c)
        g_next, s_next, mm = build_coarse_graph(graphs[-1], attrs[-1], m)
        graphs.append(g_next)
        attrs.append(s_next)
        merges.append(mm)
    return Hierarchy(graphs, attrs, merges, lambda_c)


# -- persistence -----------------------------------------------------------
# A hierarchy is a directory: level_i.edges (edge-list format),
# level_i.attrs.csv (numeric attribute matrix), merge_i.map (`child parent`
# per line). Isolated nodes appear only in the attrs file, so loading takes
# the node set from there.

def save_hierarchy(h: Hierarchy, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for i, (g, a) in enumerate(zip(h.graphs, h.attrs)):
        names = g.node_names if g.node_names is not None else [str(j) for j in range(g.n)]
        write_edge_list(g, os.path.join(directory, f"level_{i}.edges"))
        write_attribute_matrix(os.path.join(directory, f"level_{i}.attrs.csv"), a, names)
    for i, mm in enumerate(h.merges):
        with open(os.path.join(directory, f"merge_{i}.map"), "w", encoding="utf-8") as fh:
            for child, par in enumerate(mm.child_to_parent):
                fh.write(f"{child} {par}\n")


def load_hierarchy(directory, lambda_c: float = 0.5) -> Hierarchy:
    graphs = []
    attrs = []
    merges = []
    i = 0
    while os.path.exists(os.path.join(directory, f"level_{i}.edges")):
        a, names = read_attribute_matrix(os.path.join(directory, f"level_{i}.attrs.csv"))
        g = read_edge_list(os.path.join(directory, f"level_{i}.edges"), nodes=names)
        graphs.append(g)
        attrs.append(a)
        i += 1
    if not graphs:
        raise InputError(f"no hierarchy levels found in {directory!r}")
    for j in range(len(graphs) - 1):
        path = os.path.join(directory, f"merge_{j}.map")
        if not os.path.exists(path):
            raise InputError(f"missing merge map {path!r}")
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                child, par = line.split()
                pairs.append((int(child), int(par)))
        parent = np.full(graphs[j].n, -1, dtype=np.int64)
        for child, par in pairs:
            parent[child] = par
        if np.any(parent < 0):
            raise InputError(f"merge map {path!r} does not cover every node")
        merges.append(MergeMap(parent))
    return Hierarchy(graphs, attrs, merges, lambda_c)
