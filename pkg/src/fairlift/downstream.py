"""Downstream evaluation: node classification and link prediction.

Embeddings are frozen; a softmax-regression classifier is trained on top.
Link prediction removes a slice of edges, trains on Hadamard pair features
of the remaining ones plus sampled non-edges, and scores held-out pairs.
Test labels are never visible to training, only to the metric computations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NotEnoughNonEdges, SingleClassInput
from .graph import Graph, from_dense_edges
from .metrics import (GroupedPredictions, PairScores, delta_dp, delta_eo,
                      lp_fairness, utility_metrics)

__all__ = [
    "LinearClassifier",
    "LpSplit",
    "EvalReport",
    "train_linear_classifier",
    "stratified_split",
    "nc_evaluate",
    "lp_split",
    "hadamard_features",
    "lp_evaluate",
    "read_labels",
    "write_labels",
    "write_summary",
]


@dataclass
class LinearClassifier:
    """Softmax regression: W maps features to class scores, classes in sorted order."""

    W: np.ndarray
    b: np.ndarray
    classes: np.ndarray
    loss_trace: np.ndarray | None = None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        scores = X @ self.W + self.b
        scores -= scores.max(axis=1, keepdims=True)
        np.exp(scores, out=scores)
        scores /= scores.sum(axis=1, keepdims=True)
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]


@dataclass
class EvalReport:
    """Utility and per-attribute fairness metrics plus phase timings."""

    utility: dict
    fairness: dict
    timings: dict = field(default_factory=dict)

    def flat(self) -> dict:
        out = dict(self.utility)
        for attr, metrics in self.fairness.items():
            for name, value in metrics.items():
                out[f"{name}[{attr}]"] = value
        return out


def train_linear_classifier(X: np.ndarray, y: np.ndarray, seed: int = 0,
                            l2: float = 1e-4, epochs: int = 300,
                            lr: float = 0.1) -> LinearClassifier:
    """Full-batch gradient descent on L2-penalized cross-entropy.

    Weights start at zero, so training is deterministic; the seed argument
    is accepted for interface uniformity. Bias stays unpenalized.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClassInput("classifier needs at least two classes")
    n, d = X.shape
    K = classes.size
    Y = (y[:, None] == classes[None, :]).astype(np.float64)
    W = np.zeros((d, K))
    b = np.zeros(K)
    trace = np.zeros(epochs + 1)
    for epoch in range(epochs + 1):
        scores = X @ W + b
        scores -= scores.max(axis=1, keepdims=True)
        exps = np.exp(scores)
        P = exps / exps.sum(axis=1, keepdims=True)
        trace[epoch] = (-np.sum(Y * np.log(np.maximum(P, 1e-300))) / n
                        + 0.5 * l2 * np.sum(W * W))
        if epoch == epochs:
            break
        G = (P - Y) / n
        W -= lr * (X.T @ G + l2 * W)
        b -= lr * G.sum(axis=0)
    return LinearClassifier(W, b, classes, loss_trace=trace)


def stratified_split(y: np.ndarray, ratios: tuple[float, float, float],
                     seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class shuffled split into (train, val, test) index arrays."""
    r_train, r_val, r_test = ratios
    if min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise InputError("split ratios must be nonnegative and sum to 1")
    y = np.asarray(y)
    rng = np.random.default_rng([np.uint64(seed), np.uint64(0x51A7)])
    train, val, test = [], [], []
    for c in np.unique(y):
        members = np.where(y == c)[0]
        rng.shuffle(members)
        k = members.size
        n_tr = int(r_train * k)
        n_va = int(r_val * k)
        if n_tr == 0:
            raise InputError(f"class {c!r} has no training samples under this split")
        train.append(members[:n_tr])
        val.append(members[n_tr:n_tr + n_va])
        test.append(members[n_tr + n_va:])
    return (np.sort(np.concatenate(train)), np.sort(np.concatenate(val)),
            np.sort(np.concatenate(test)))


def _as_group_dict(groups) -> dict:
    if isinstance(groups, dict):
        return {k: np.asarray(v) for k, v in groups.items()}
    return {"group": np.asarray(groups)}


def nc_evaluate(E: np.ndarray, labels: np.ndarray, groups,
                split_ratio: tuple[float, float, float] = (0.5, 0.25, 0.25),
                seed: int = 0, y_plus: tuple = (),
                classifier_kwargs: dict | None = None) -> EvalReport:
    """Node classification with a stratified split.

    Trains on the train rows only and reports utility plus fairness on the
    test rows. ``y_plus`` optionally restricts the advantaged label set for
    the fairness metrics.
    """
    E = np.asarray(E, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape[0] != E.shape[0]:
        raise InputError("labels do not match embedding rows")
    group_dict = _as_group_dict(groups)
    train_idx, _, test_idx = stratified_split(labels, split_ratio, seed)
    clf = train_linear_classifier(E[train_idx], labels[train_idx],
                                  **(classifier_kwargs or {}))
    proba = clf.predict_proba(E[test_idx])
    y_test = labels[test_idx]
    y_hat = clf.classes[np.argmax(proba, axis=1)]

    class_set = set(clf.classes.tolist())
    if class_set <= {0, 1} or class_set <= {"0", "1"}:
        positive = 1 if class_set <= {0, 1} else "1"
        pos_col = int(np.where(clf.classes == positive)[0][0])
        utility = utility_metrics(proba[:, pos_col], (y_test == positive).astype(int),
                                  "binary")
    else:
        # align probability columns with the class codes used by auroc
        code = {c: i for i, c in enumerate(clf.classes)}
        y_codes = np.array([code[c] for c in y_test])
        utility = utility_metrics(proba, y_codes, "multiclass")

    fairness = {}
    for attr, arr in group_dict.items():
        if arr.shape[0] != E.shape[0]:
            raise InputError(f"group array {attr!r} does not match embedding rows")
        gp = GroupedPredictions(y_hat, arr[test_idx], y=y_test,
                                advantaged=tuple(y_plus))
        fairness[attr] = {"delta_dp": delta_dp(gp), "delta_eo": delta_eo(gp)}
    return EvalReport(utility, fairness)


@dataclass
class LpSplit:
    """Edge split for link prediction; all pair arrays are (k, 2) index pairs."""

    train_graph: Graph
    test_pos: np.ndarray
    test_neg: np.ndarray
    train_neg: np.ndarray
    seed: int


def lp_split(g: Graph, ratio: float = 0.10, seed: int = 0) -> LpSplit:
    """Hold out a fraction of edges plus matched non-edge negatives.

    Self-loops are never sampled, as positives or negatives. Test and train
    negatives are drawn jointly without replacement, so they are disjoint
    from each other and from every edge of the full graph.
    """
    if not 0.0 <= ratio < 1.0:
        raise InputError("ratio must lie in [0, 1)")
    off = g.edge_u != g.edge_v
    eu, ev, ew = g.edge_u[off], g.edge_v[off], g.edge_w[off]
    n_edges = eu.size
    if ratio > 0.0 and n_edges < 10:
        raise InputError("need at least 10 edges to split")
    rng = np.random.default_rng([np.uint64(seed), np.uint64(0x11F0)])
    n_test = int(ratio * n_edges)
    perm = rng.permutation(n_edges)
    test_sel = np.zeros(n_edges, dtype=bool)
    test_sel[perm[:n_test]] = True
    test_pos = np.stack([eu[test_sel], ev[test_sel]], axis=1)

    keep = ~test_sel
    loops = ~off
    train_graph = from_dense_edges(
        g.n,
        np.concatenate([eu[keep], g.edge_u[loops]]),
        np.concatenate([ev[keep], g.edge_v[loops]]),
        np.concatenate([ew[keep], g.edge_w[loops]]))
    if g.node_names is not None:
        train_graph.node_names = list(g.node_names)

    n_train_neg = n_edges - n_test
    needed = n_test + n_train_neg
    total_pairs = g.n * (g.n - 1) // 2
    available = total_pairs - n_edges
    if needed > available:
        raise NotEnoughNonEdges(f"need {needed} non-edges, graph has {available}")

    edge_keys = set((int(a), int(b)) for a, b in zip(eu, ev))
    chosen: list[tuple[int, int]] = []
    seen = set()
    if available <= 2 * needed:
        # tight case: enumerate every non-edge and subsample
        candidates = [(u, v) for u in range(g.n) for v in range(u + 1, g.n)
                      if (u, v) not in edge_keys]
        order = rng.permutation(len(candidates))
        chosen = [candidates[i] for i in order[:needed]]
    else:
        while len(chosen) < needed:
            u = int(rng.integers(0, g.n))
            v = int(rng.integers(0, g.n))
            if u == v:
                continue
            if u > v:
                u, v = v, u
            if (u, v) in edge_keys or (u, v) in seen:
                continue
            seen.add((u, v))
            chosen.append((u, v))
    negs = np.asarray(chosen, dtype=np.int64).reshape(needed, 2)
    return LpSplit(train_graph, test_pos.astype(np.int64),
                   negs[:n_test], negs[n_test:], seed)


def hadamard_features(E: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Element-wise product of the two endpoint rows, one row per pair."""
    E = np.asarray(E, dtype=np.float64)
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= E.shape[0]):
        raise InputError("pair index out of range")
    if pairs.size == 0:
        return np.zeros((0, E.shape[1]))
    return E[pairs[:, 0]] * E[pairs[:, 1]]


def lp_evaluate(E: np.ndarray, split: LpSplit, groups,
                classifier_kwargs: dict | None = None) -> EvalReport:
    """Link prediction on held-out pairs.

    The classifier sees only training edges and training negatives; scores
    on the test pairs feed both the utility metrics and the intra/inter
    group score gaps.
    """
    E = np.asarray(E, dtype=np.float64)
    if E.shape[0] != split.train_graph.n:
        raise InputError("embedding rows do not match split's node count")
    g = split.train_graph
    off = g.edge_u != g.edge_v
    train_pos = np.stack([g.edge_u[off], g.edge_v[off]], axis=1)
    X_train = np.vstack([hadamard_features(E, train_pos),
                         hadamard_features(E, split.train_neg)])
    y_train = np.concatenate([np.ones(train_pos.shape[0], dtype=np.int64),
                              np.zeros(split.train_neg.shape[0], dtype=np.int64)])
    clf = train_linear_classifier(X_train, y_train, **(classifier_kwargs or {}))

    test_pairs = np.vstack([split.test_pos, split.test_neg])
    is_edge = np.concatenate([np.ones(split.test_pos.shape[0], dtype=bool),
                              np.zeros(split.test_neg.shape[0], dtype=bool)])
    proba = clf.predict_proba(hadamard_features(E, test_pairs))
    pos_col = int(np.where(clf.classes == 1)[0][0])
    scores = proba[:, pos_col]
    utility = utility_metrics(scores, is_edge, "pair")

    fairness = {}
    for attr, arr in _as_group_dict(groups).items():
        if arr.shape[0] != E.shape[0]:
            raise InputError(f"group array {attr!r} does not match embedding rows")
        ps = PairScores(scores, is_edge, arr[test_pairs[:, 0]], arr[test_pairs[:, 1]])
        dp, eo = lp_fairness(ps)
        fairness[attr] = {"delta_dp_lp": dp, "delta_eo_lp": eo}
    return EvalReport(utility, fairness)


# -- label and summary files -------------------------------------------------

def read_labels(path) -> dict:
    """CSV `node,label`; labels stay strings."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["node", "label"]:
            raise InputError(f"{path}: expected header node,label")
        for row in reader:
            if not row:
                continue
            out[row[0]] = row[1]
    return out


def write_labels(path, labels: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "label"])
        for node, label in labels.items():
            writer.writerow([node, label])


def write_summary(path, metric_values: dict) -> None:
    """Multi-run summary CSV `metric,mean,std` (population std)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std"])
        for metric in sorted(metric_values):
            values = np.asarray(metric_values[metric], dtype=np.float64)
            writer.writerow([metric, repr(float(values.mean())),
                             repr(float(values.std()))])
