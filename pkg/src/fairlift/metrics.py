"""Group-fairness and utility metrics.

The fairness scores generalize the usual binary-attribute gaps to any number
of demographic groups and predicted classes: for each advantaged class, take
the population standard deviation of the per-group rates, then average over
the advantaged classes. With two groups, one advantaged class and binary
predictions this reduces exactly to half the familiar absolute-difference
form, which is why the population (not sample) deviation is used.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyStratum, InputError, SingleClassInput

logger = logging.getLogger(__name__)

__all__ = [
    "GroupedPredictions",
    "PairScores",
    "delta_dp",
    "delta_eo",
    "lp_fairness",
    "auroc",
    "average_precision",
    "accuracy",
    "f1_binary",
    "micro_f1",
    "utility_metrics",
    "report_to_json",
]


@dataclass
class GroupedPredictions:
    """Predictions with group membership for fairness evaluation.

    ``y`` (ground truth) may be omitted when only demographic parity is
    needed. ``advantaged`` is the label subset the dispersion is averaged
    over; it defaults to all observed labels for multi-class predictions and
    to ``{1}`` for binary ``{0, 1}`` predictions.
    """

    y_hat: np.ndarray
    group: np.ndarray
    y: np.ndarray | None = None
    advantaged: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.y_hat = np.asarray(self.y_hat)
        self.group = np.asarray(self.group)
        if self.y is not None:
            self.y = np.asarray(self.y)
            if self.y.shape != self.y_hat.shape:
                raise InputError("y and y_hat lengths differ")
        if self.group.shape != self.y_hat.shape:
            raise InputError("group and y_hat lengths differ")
        if self.y_hat.size == 0:
            raise InputError("no instances")
        if not self.advantaged:
            labels = set(np.unique(self.y_hat).tolist())
            if self.y is not None:
                labels |= set(np.unique(self.y).tolist())
            if labels <= {0, 1}:
                self.advantaged = (1,)
            elif labels <= {"0", "1"}:
                self.advantaged = ("1",)
            else:
                self.advantaged = tuple(sorted(labels))


def delta_dp(gp: GroupedPredictions) -> float:
    """Demographic-parity dispersion: mean over advantaged classes of the
    population std of per-group positive-prediction rates."""
    groups = np.unique(gp.group)
    if groups.size == 0:
        raise InputError("no groups")
    sigmas = []
    for label in gp.advantaged:
        rates = [np.mean(gp.y_hat[gp.group == s] == label) for s in groups]
        sigmas.append(np.std(rates))
    return float(np.mean(sigmas))


def delta_eo(gp: GroupedPredictions) -> float:
    """Equality-of-opportunity dispersion over true-positive rates.

    For each advantaged class, only groups with at least one member of that
    class enter the deviation; a class with fewer than two such groups
    contributes zero (logged, not raised).
    """
    if gp.y is None:
        raise InputError("delta_eo needs ground-truth labels")
    groups = np.unique(gp.group)
    sigmas = []
    for label in gp.advantaged:
        rates = []
        for s in groups:
            mask = (gp.group == s) & (gp.y == label)
            if not mask.any():
                continue
            rates.append(np.mean(gp.y_hat[mask] == label))
        if len(rates) < 2:
            logger.warning("delta_eo: class %r present in %d group(s); contributes 0",
                           label, len(rates))
            sigmas.append(0.0)
        else:
            sigmas.append(np.std(rates))
    return float(np.mean(sigmas))


@dataclass
class PairScores:
    """Link-prediction scores with endpoint groups and edge flags."""

    scores: np.ndarray
    is_edge: np.ndarray
    group_u: np.ndarray
    group_v: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.is_edge = np.asarray(self.is_edge, dtype=bool)
        self.group_u = np.asarray(self.group_u)
        self.group_v = np.asarray(self.group_v)
        if not (self.scores.shape == self.is_edge.shape
                == self.group_u.shape == self.group_v.shape):
            raise InputError("pair arrays must share one length")
        if self.scores.size and (self.scores.min() < 0.0 or self.scores.max() > 1.0):
            raise InputError("pair scores must lie in [0, 1]")


def lp_fairness(ps: PairScores) -> tuple[float, float]:
    """(intra vs inter) mean-score gaps: over all pairs, and over true edges.

    Raises EmptyStratum when any of the four strata has no pairs.
    """
    intra = ps.group_u == ps.group_v
    strata = {
        "intra": intra,
        "inter": ~intra,
        "intra edges": intra & ps.is_edge,
        "inter edges": ~intra & ps.is_edge,
    }
    for name, mask in strata.items():
        if not mask.any():
            raise EmptyStratum(f"no {name} pairs to evaluate")
    dp = abs(float(ps.scores[strata["intra"]].mean()) - float(ps.scores[strata["inter"]].mean()))
    eo = abs(float(ps.scores[strata["intra edges"]].mean())
             - float(ps.scores[strata["inter edges"]].mean()))
    return dp, eo


# -- utility metrics -------------------------------------------------------

def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-statistic AUROC with average ranks on ties (Mann-Whitney)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("AUROC needs both classes")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(labels.size, dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < labels.size:
        j = i
        while j + 1 < labels.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    rank_sum = float(ranks[labels].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the precision-recall sweep: sum of (dR * precision) over
    descending score thresholds, ties grouped."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise SingleClassInput("average precision needs both classes")
    order = np.argsort(-scores, kind="mergesort")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    tp = np.cumsum(sorted_labels)
    seen = np.arange(1, labels.size + 1)
    # keep only the last index of each tied-score run (threshold boundaries)
    boundary = np.ones(labels.size, dtype=bool)
    boundary[:-1] = sorted_scores[:-1] != sorted_scores[1:]
    precision = tp[boundary] / seen[boundary]
    recall = tp[boundary] / n_pos
    d_recall = np.diff(np.concatenate([[0.0], recall]))
    return float(np.sum(d_recall * precision))


def accuracy(y_hat: np.ndarray, y: np.ndarray) -> float:
    y_hat = np.asarray(y_hat)
    y = np.asarray(y)
    return float(np.mean(y_hat == y))


def f1_binary(y_hat: np.ndarray, y: np.ndarray, positive=1) -> float:
    y_hat = np.asarray(y_hat)
    y = np.asarray(y)
    tp = np.sum((y_hat == positive) & (y == positive))
    fp = np.sum((y_hat == positive) & (y != positive))
    fn = np.sum((y_hat != positive) & (y == positive))
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def micro_f1(y_hat: np.ndarray, y: np.ndarray) -> float:
    """Micro-averaged F1 over classes; equals accuracy for single-label tasks."""
    y_hat = np.asarray(y_hat)
    y = np.asarray(y)
    classes = np.unique(np.concatenate([y_hat, y]))
    tp = fp = fn = 0
    for c in classes:
        tp += np.sum((y_hat == c) & (y == c))
        fp += np.sum((y_hat == c) & (y != c))
        fn += np.sum((y_hat != c) & (y == c))
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def utility_metrics(scores: np.ndarray, y_true: np.ndarray, task: str) -> dict[str, float]:
    """Utility bundle per task kind.

    ``binary``: scores are positive-class probabilities -> auroc, f1,
    accuracy (0.5 threshold). ``multiclass``: scores is an ``n x K``
    probability matrix -> one-vs-rest macro auroc, micro_f1, accuracy over
    argmax. ``pair``: scores in [0, 1] against edge flags -> auroc, ap,
    accuracy (0.5 threshold).
    """
    scores = np.asarray(scores, dtype=float)
    y_true = np.asarray(y_true)
    if task == "binary":
        y_hat = (scores >= 0.5).astype(y_true.dtype)
        return {
            "auroc": auroc(scores, y_true == 1),
            "f1": f1_binary(y_hat, y_true),
            "accuracy": accuracy(y_hat, y_true),
        }
    if task == "multiclass":
        if scores.ndim != 2:
            raise InputError("multiclass task needs an n x K probability matrix")
        y_hat = np.argmax(scores, axis=1)
        present = np.unique(y_true)
        aucs = [auroc(scores[:, k], y_true == k) for k in present
                if 0 < np.sum(y_true == k) < y_true.size]
        return {
            "auroc": float(np.mean(aucs)) if aucs else float("nan"),
            "micro_f1": micro_f1(y_hat, y_true),
            "accuracy": accuracy(y_hat, y_true),
        }
    if task == "pair":
        y_hat = (scores >= 0.5).astype(int)
        return {
            "auroc": auroc(scores, y_true),
            "ap": average_precision(scores, y_true),
            "accuracy": accuracy(y_hat, y_true.astype(int)),
        }
    raise InputError(f"unknown task {task!r}")


def report_to_json(report: dict) -> str:
    """Serialize a flat metric dict deterministically (sorted keys, repr floats)."""
    flat = {}
    for key, value in report.items():
        if isinstance(value, (np.floating, float)):
            flat[key] = float(value)
        elif isinstance(value, (np.integer, int)):
            flat[key] = int(value)
        else:
            flat[key] = value
    return json.dumps(flat, sort_keys=True, indent=2) + "\n"
