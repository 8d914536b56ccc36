"""Base embedders for the coarsest graph.

The rest of the pipeline only needs (graph in, embedding out), so any node
embedding method can slot in here. Two are provided: a deterministic
spectral embedder (dense eigendecomposition of the normalized adjacency)
and a DeepWalk-style random-walk skip-gram embedder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _sgns
from .errors import InputError, NumericError, ZeroMassRow
from .graph import Graph, normalized_adjacency

__all__ = [
    "Embedding",
    "EmbedderConfig",
    "embed",
    "embed_spectral",
    "embed_deepwalk",
    "l2_normalize_rows",
    "write_embedding",
    "read_embedding",
]

NEGATIVE_TABLE_SIZE = 1_000_000
SPECTRAL_MAX_NODES = 5000


@dataclass
class Embedding:
    """Node embedding matrix with its dimensionality and normalization flag."""

    E: np.ndarray
    d: int
    normalized: bool = False
    training_loss: np.ndarray | None = None

    def __post_init__(self):
        self.E = np.asarray(self.E, dtype=np.float64)
        if self.E.ndim != 2 or self.E.shape[1] != self.d:
            raise InputError("embedding matrix shape does not match d")
        if not np.all(np.isfinite(self.E)):
            raise NumericError("embedding contains non-finite entries")
        if self.normalized:
            norms = np.linalg.norm(self.E, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise NumericError("normalized flag set but row norms deviate from 1")


@dataclass
class EmbedderConfig:
    kind: str = "spectral"
    d: int = 128
    seed: int = 0
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    negatives: int = 5
    epochs: int = 1
    initial_lr: float = 0.025

    def __post_init__(self):
        if self.d < 1:
            raise InputError("embedding dimension must be >= 1")
        for name in ("walks_per_node", "walk_length", "window", "negatives", "epochs"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1")
        if self.initial_lr <= 0.0:
            raise InputError("initial_lr must be positive")


def embed(g: Graph, cfg: EmbedderConfig) -> Embedding:
    """Dispatch to the configured embedder."""
    if g.n == 0:
        raise InputError("cannot embed an empty graph")
    if cfg.kind == "spectral":
        return embed_spectral(g, cfg.d, cfg.seed)
    if cfg.kind == "deepwalk":
        return embed_deepwalk(g, cfg, cfg.seed)
    raise InputError(f"unknown embedder kind {cfg.kind!r}")


def embed_spectral(g: Graph, d: int, seed: int = 0) -> Embedding:
    """Top-d eigenpairs of the normalized adjacency (self-loops added).

    Column k is v_k * sqrt(max(lambda_k, 0)), eigenvalues descending, each
    eigenvector's sign fixed so its largest-magnitude entry is positive.
    The seed argument exists for interface symmetry; the method is
    deterministic.
    """
    if g.n > SPECTRAL_MAX_NODES:
        raise InputError(f"spectral embedder is dense; {g.n} nodes exceeds "
                         f"{SPECTRAL_MAX_NODES}")
    if g.n < d:
        raise InputError(f"need at least d={d} nodes, got {g.n}")
    P = normalized_adjacency(g, add_self_loops=True).toarray()
    eigvals, eigvecs = np.linalg.eigh(P)
    take = np.arange(g.n - 1, g.n - d - 1, -1)
    eigvals = eigvals[take]
    eigvecs = eigvecs[:, take]
    for k in range(d):
        lead = np.argmax(np.abs(eigvecs[:, k]))
        if eigvecs[lead, k] < 0.0:
            eigvecs[:, k] = -eigvecs[:, k]
    E = eigvecs * np.sqrt(np.maximum(eigvals, 0.0))[None, :]
    return Embedding(E, d)


def embed_deepwalk(g: Graph, cfg: EmbedderConfig, seed: int | None = None) -> Embedding:
    """Random-walk skip-gram embedding.

    Each pass visits nodes in a freshly shuffled order and starts one walk
    per node; the next step is drawn proportionally to edge weight
    (self-loops included). Isolated nodes emit length-1 walks, so their rows
    receive no positive updates and stay at initialization scale. Training
    follows the word2vec conventions: reduced windows, unigram^0.75
    negative table, linear learning-rate decay. Returns the input vectors.
    """
    if seed is None:
        seed = cfg.seed
    n = g.n
    rng = np.random.default_rng([np.uint64(seed), np.uint64(0xD1B5)])

    cumw = np.empty_like(g.data)
    for u in range(n):
        lo, hi = g.indptr[u], g.indptr[u + 1]
        cumw[lo:hi] = np.cumsum(g.data[lo:hi])

    starts = np.empty(n * cfg.walks_per_node, dtype=np.int64)
    streams = np.empty(n * cfg.walks_per_node, dtype=np.uint64)
    for pas in range(cfg.walks_per_node):
        order = rng.permutation(n)
        starts[pas * n:(pas + 1) * n] = order
        streams[pas * n:(pas + 1) * n] = (
            order.astype(np.uint64) * np.uint64(cfg.walks_per_node) + np.uint64(pas)
        )
    walks = _sgns.generate_walks(g.indptr.astype(np.int64), g.indices.astype(np.int64),
                                 cumw, starts, streams, cfg.walk_length, seed)

    tokens = walks[walks >= 0]
    counts = np.bincount(tokens, minlength=n).astype(np.float64)
    weights = counts ** 0.75
    cum = np.cumsum(weights)
    positions = (np.arange(NEGATIVE_TABLE_SIZE) + 0.5) / NEGATIVE_TABLE_SIZE * cum[-1]
    table = np.searchsorted(cum, positions, side="right").astype(np.int32)

    syn0 = ((rng.random((n, cfg.d)) - 0.5) / cfg.d).astype(np.float32)
    syn1 = np.zeros((n, cfg.d), dtype=np.float32)
    losses = _sgns.train_sgns(walks, syn0, syn1, cfg.window, cfg.negatives, table,
                              cfg.initial_lr, cfg.epochs, seed, int(tokens.size))
    return Embedding(syn0.astype(np.float64), cfg.d, training_loss=losses)


def l2_normalize_rows(M: np.ndarray) -> np.ndarray:
    """Scale each row to unit L2 norm; zero rows are an error."""
    M = np.asarray(M, dtype=np.float64)
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms <= 0.0):
        raise ZeroMassRow(f"row {int(np.argmin(norms))} has zero norm")
    return M / norms[:, None]


# -- embedding text format --------------------------------------------------
# Header `N d`, then one line per node: `node-id v1 ... vd`. Floats written
# with repr so a reload reproduces the matrix bit for bit.

def write_embedding(path, emb: Embedding, node_names=None) -> None:
    n = emb.E.shape[0]
    if node_names is None:
        node_names = [str(i) for i in range(n)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {emb.d}\n")
        for i in range(n):
            values = " ".join(repr(float(x)) for x in emb.E[i])
            fh.write(f"{node_names[i]} {values}\n")


def read_embedding(path):
    """Load an embedding text file; returns (Embedding, node names)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise InputError(f"{path}: malformed embedding header")
        n, d = int(header[0]), int(header[1])
        names = []
        rows = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise InputError(f"{path}: row {i} has {len(parts) - 1} values, expected {d}")
            names.append(parts[0])
            rows[i] = [float(x) for x in parts[1:]]
    with np.errstate(over="ignore"):  # overflowing rows are just not normalized
        norms = np.linalg.norm(rows, axis=1)
    normalized = bool(np.all(np.abs(norms - 1.0) <= 1e-6))
    return Embedding(rows, d, normalized=normalized), names
