"""Synthetic attributed graphs for tests and benchmarks.

A stochastic block model with a planted binary sensitive attribute: nodes
get contiguous blocks, the attribute follows block parity with correlation
rho, and labels follow the block with configurable noise plus a
group-conditional skew that creates a measurable demographic-parity gap.
An optional same-group edge bonus plants attribute homophily on top of the
block structure, so embeddings pick up the sensitive signal unless the
pipeline suppresses it.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .attributes import write_attribute_table
from .downstream import write_labels
from .errors import InputError
from .graph import Graph, from_dense_edges, write_edge_list

__all__ = ["SyntheticSpec", "generate", "generate_synthetic"]


@dataclass
class SyntheticSpec:
    kind: str = "sbm"
    n: int = 100
    blocks: int = 2
    p_intra: float = 0.1
    p_inter: float = 0.01
    rho: float = 0.0
    n_classes: int = 2
    label_noise: float = 0.0
    label_skew: float = 0.0
    group_boost: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sbm", "erdos"):
            raise InputError(f"unknown synthetic kind {self.kind!r}")
        if self.n < 2 or self.blocks < 1 or self.n_classes < 1:
            raise InputError("need n >= 2, blocks >= 1, n_classes >= 1")
        for name in ("p_intra", "p_inter", "rho", "label_noise", "label_skew",
                     "group_boost"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InputError(f"{name} must lie in [0, 1]")


def _triangular_decode(t: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Map flat indices of the strict upper triangle of a k x k grid to (u, v)."""
    t = t.astype(np.float64)
    u = np.floor((2 * k - 1 - np.sqrt((2 * k - 1) ** 2 - 8 * t)) / 2).astype(np.int64)
    base = u * (2 * k - u - 1) // 2
    v = (t - base).astype(np.int64) + u + 1
    return u, v


def _sample_pairs_within(rng, members: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Bernoulli(p) edges among all unordered pairs of ``members``."""
    k = members.size
    candidates = k * (k - 1) // 2
    if candidates == 0 or p == 0.0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    count = int(rng.binomial(candidates, p))
    if count == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    flat = rng.choice(candidates, size=count, replace=False)
    flat.sort()
    lu, lv = _triangular_decode(flat, k)
    return members[lu], members[lv]


def _sample_pairs_between(rng, left: np.ndarray, right: np.ndarray,
                          p: float) -> tuple[np.ndarray, np.ndarray]:
    candidates = left.size * right.size
    if candidates == 0 or p == 0.0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    count = int(rng.binomial(candidates, p))
    if count == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    flat = rng.choice(candidates, size=count, replace=False)
    flat.sort()
    return left[flat // right.size], right[flat % right.size]


def generate(spec: SyntheticSpec) -> tuple[Graph, dict, dict, np.ndarray, np.ndarray]:
    """Build the graph in memory.

    Returns (graph, attribute table, label table, group array, block array).
    Node names are "0".."n-1"; isolated nodes are kept.
    """
    rng = np.random.default_rng([np.uint64(spec.seed), np.uint64(0x5B3)])
    n = spec.n
    blocks = 1 if spec.kind == "erdos" else spec.blocks
    block = (np.arange(n) * blocks) // n

    group = block % 2
    flip = rng.random(n) < (1.0 - spec.rho) / 2.0
    group = np.where(flip, 1 - group, group)

    us, vs = [], []
    for a in range(blocks):
        ma = np.where(block == a)[0]
        eu, ev = _sample_pairs_within(rng, ma, spec.p_intra)
        us.append(eu)
        vs.append(ev)
        for b in range(a + 1, blocks):
            mb = np.where(block == b)[0]
            eu, ev = _sample_pairs_between(rng, ma, mb, spec.p_inter)
            us.append(eu)
            vs.append(ev)
    if spec.group_boost > 0.0:
        for gvalue in (0, 1):
            mg = np.where(group == gvalue)[0]
            eu, ev = _sample_pairs_within(rng, mg, spec.group_boost)
            us.append(eu)
            vs.append(ev)
    eu = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    ev = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    # union of the block edges and the bonus edges, each edge once at weight 1
    lo = np.minimum(eu, ev)
    hi = np.maximum(eu, ev)
    key = np.unique(lo * np.int64(n) + hi)
    g = from_dense_edges(n, key // n, key % n, np.ones(key.size))
    g.node_names = [str(i) for i in range(n)]

    labels = block % spec.n_classes
    noise_draw = rng.random(n)
    random_labels = rng.integers(0, spec.n_classes, size=n)
    skew_draw = rng.random(n)
    labels = np.where(noise_draw < spec.label_noise, random_labels, labels)
    labels = np.where(skew_draw < spec.label_skew, group % spec.n_classes, labels)

    attr_table = {str(i): {"group": str(int(group[i]))} for i in range(n)}
    label_table = {str(i): str(int(labels[i])) for i in range(n)}
    return g, attr_table, label_table, group, block


def generate_synthetic(spec: SyntheticSpec, out_dir) -> tuple[str, str, str]:
    """Write edges/attrs/labels files; returns their paths."""
    g, attr_table, label_table, _, _ = generate(spec)
    os.makedirs(out_dir, exist_ok=True)
    edges_path = os.path.join(out_dir, "graph.edges")
    attrs_path = os.path.join(out_dir, "attrs.csv")
    labels_path = os.path.join(out_dir, "labels.csv")
    write_edge_list(g, edges_path)
    write_attribute_table(attrs_path, [str(i) for i in range(spec.n)], attr_table)
    write_labels(labels_path, label_table)
    return edges_path, attrs_path, labels_path
