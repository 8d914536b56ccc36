"""Fairness-regularized embedding refinement.

A small graph-convolutional model is trained once on the coarsest graph to
reproduce the base embedding (utility loss) while pushing the scores of
demographically divergent edges down (fairness loss), then applied level by
level to lift embeddings back to the original graph. Gradients are written
out by hand; the model is two tanh layers, so autograd machinery would be
heavier than the math.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .attributes import AttributeMatrix, pairwise_divergence, row_normalize
from .coarsen import Hierarchy, MergeMap
from .embed import Embedding, l2_normalize_rows
from .errors import DimensionMismatch, InputError, NumericError
from .graph import Graph, normalized_adjacency

__all__ = [
    "RefinementModel",
    "RefineHyper",
    "FairEdgeMask",
    "project",
    "gcn_forward",
    "build_fair_edge_mask",
    "losses",
    "gradients",
    "train_refiner",
    "refine_all",
    "theorem1_check",
    "save_model",
    "load_model",
    "write_loss_trace",
]


@dataclass
class RefinementModel:
    """Stack of tanh graph-convolution layers, each mapping (d + M) -> d."""

    layers: list[np.ndarray]
    d: int
    m: int

    @property
    def l(self) -> int:
        return len(self.layers)

    def __post_init__(self):
        if not self.layers:
            raise InputError("model needs at least one layer")
        for i, theta in enumerate(self.layers):
            if theta.shape != (self.d + self.m, self.d):
                raise DimensionMismatch(
                    f"layer {i} has shape {theta.shape}, expected "
                    f"({self.d + self.m}, {self.d})")
            if not np.all(np.isfinite(theta)):
                raise NumericError(f"layer {i} contains non-finite parameters")


@dataclass
class RefineHyper:
    lambda_r: float = 0.5
    gamma: float = 0.5
    epochs: int = 200
    learning_rate: float = 1e-3
    init_seed: int = 0
    layers: int = 2

    def __post_init__(self):
        if not 0.0 <= self.lambda_r <= 1.0:
            raise InputError("lambda_r must lie in [0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise InputError("gamma must lie in [0, 1]")
        if self.epochs < 0 or self.layers < 1 or self.learning_rate <= 0.0:
            raise InputError("bad training hyperparameters")


@dataclass
class FairEdgeMask:
    """Unordered non-self-loop edges whose attribute divergence clears gamma."""

    edge_u: np.ndarray
    edge_v: np.ndarray
    n: int

    @property
    def edge_count(self) -> int:
        return int(self.edge_u.shape[0])

    def matrix(self) -> sp.csr_matrix:
        """Symmetric 0/1 sparse form of the mask."""
        rows = np.concatenate([self.edge_u, self.edge_v])
        cols = np.concatenate([self.edge_v, self.edge_u])
        vals = np.ones(rows.shape[0])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))


def project(E_coarse: np.ndarray, mm: MergeMap) -> np.ndarray:
    """Copy each parent's embedding row down to all of its children."""
    E_coarse = np.asarray(E_coarse, dtype=np.float64)
    if mm.n_coarse != E_coarse.shape[0]:
        raise DimensionMismatch(
            f"merge map expects {mm.n_coarse} coarse rows, matrix has "
            f"{E_coarse.shape[0]}")
    return E_coarse[mm.child_to_parent]


def gcn_forward(model: RefinementModel, g: Graph, S_tilde: np.ndarray,
                H_0: np.ndarray) -> list[np.ndarray]:
    """All layer activations H_1..H_l of
    H_i = tanh(P (H_{i-1} || S_tilde) Theta_i)."""
    H_0 = np.asarray(H_0, dtype=np.float64)
    S_tilde = np.asarray(S_tilde, dtype=np.float64)
    if H_0.shape != (g.n, model.d) or S_tilde.shape != (g.n, model.m):
        raise DimensionMismatch(
            f"expected H_0 {(g.n, model.d)} and S {(g.n, model.m)}, got "
            f"{H_0.shape} and {S_tilde.shape}")
    P = normalized_adjacency(g, add_self_loops=True)
    activations = []
    H = H_0
    for theta in model.layers:
        X = np.hstack([H, S_tilde])
        H = np.tanh((P @ X) @ theta)
        activations.append(H)
    return activations


def build_fair_edge_mask(g: Graph, S: AttributeMatrix, gamma: float) -> FairEdgeMask:
    """Keep unordered non-self-loop edges with max(phi(u,v), phi(v,u)) >= gamma.

    The divergence is asymmetric but the edge set is undirected, hence the
    symmetrization by max. Supernode self-loops are excluded even when their
    children's attributes differ.
    """
    if not 0.0 <= gamma <= 1.0:
        raise InputError("gamma must lie in [0, 1]")
    off = g.edge_u != g.edge_v
    eu = g.edge_u[off]
    ev = g.edge_v[off]
    if eu.size:
        phi = np.maximum(pairwise_divergence(S.S, eu, ev),
                         pairwise_divergence(S.S, ev, eu))
        keep = phi >= gamma
        eu, ev = eu[keep], ev[keep]
    return FairEdgeMask(eu.astype(np.int64), ev.astype(np.int64), g.n)


def losses(H_0: np.ndarray, H_l: np.ndarray, mask: FairEdgeMask,
           lambda_r: float) -> tuple[float, float, float]:
    """(L_u, L_f, L): reconstruction error, fairness score, and their blend."""
    n = H_0.shape[0]
    diff = H_l - H_0
    with np.errstate(over="ignore"):  # inf is caught by the divergence check
        L_u = float(np.sum(diff * diff)) / n
    if mask.edge_count:
        dots = np.sum(H_l[mask.edge_u] * H_l[mask.edge_v], axis=1)
        L_f = -float(np.sum(expit(dots))) / mask.edge_count
    else:
        L_f = 0.0
    L = (1.0 - lambda_r) * L_u + lambda_r * L_f
    return L_u, L_f, L


def gradients(model: RefinementModel, g: Graph, S_tilde: np.ndarray,
              H_0: np.ndarray, mask: FairEdgeMask,
              lambda_r: float) -> list[np.ndarray]:
    """Analytic gradient of the blended loss w.r.t. every layer."""
    P = normalized_adjacency(g, add_self_loops=True)
    S_tilde = np.asarray(S_tilde, dtype=np.float64)
    H_0 = np.asarray(H_0, dtype=np.float64)
    hs = [H_0]
    propagated = []  # P (H_{i-1} || S) per layer, reused by the backward pass
    H = H_0
    for theta in model.layers:
        PX = P @ np.hstack([H, S_tilde])
        H = np.tanh(PX @ theta)
        propagated.append(PX)
        hs.append(H)
    H_l = hs[-1]
    n = H_0.shape[0]

    dH = (2.0 / n) * (1.0 - lambda_r) * (H_l - H_0)
    if lambda_r > 0.0 and mask.edge_count:
        dots = np.sum(H_l[mask.edge_u] * H_l[mask.edge_v], axis=1)
        sig = expit(dots)
        sig_prime = sig * (1.0 - sig)
        rows = np.concatenate([mask.edge_u, mask.edge_v])
        cols = np.concatenate([mask.edge_v, mask.edge_u])
        G = sp.csr_matrix((np.concatenate([sig_prime, sig_prime]), (rows, cols)),
                          shape=(n, n))
        dH = dH - (lambda_r / mask.edge_count) * (G @ H_l)

    grads: list[np.ndarray] = [None] * model.l
    for i in range(model.l - 1, -1, -1):
        dZ = dH * (1.0 - hs[i + 1] ** 2)
        grads[i] = propagated[i].T @ dZ
        if i > 0:
            dX = P @ (dZ @ model.layers[i].T)  # P is symmetric
            dH = dX[:, :model.d]
    return grads


def _glorot_layers(d: int, m: int, n_layers: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    limit = np.sqrt(6.0 / ((d + m) + d))
    return [rng.uniform(-limit, limit, size=(d + m, d)) for _ in range(n_layers)]


def train_refiner(g_c: Graph, S_c: AttributeMatrix, E_c: Embedding,
                  hyper: RefineHyper) -> tuple[RefinementModel, np.ndarray]:
    """Fit the refiner on the coarsest level with full-batch Adam.

    H_0 is the base embedding itself (identity projection at the training
    level). Returns the model and a loss trace of shape (epochs+1, 3) with
    columns (L_u, L_f, L); row e holds the loss before update e, the last
    row the final loss.
    """
    if E_c.E.shape[0] != g_c.n:
        raise DimensionMismatch("embedding rows do not match graph nodes")
    d = E_c.d
    m = S_c.m
    model = RefinementModel(_glorot_layers(d, m, hyper.layers, hyper.init_seed), d, m)
    S_tilde = row_normalize(S_c.S)
    mask = build_fair_edge_mask(g_c, S_c, hyper.gamma)
    H_0 = E_c.E

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    mom = [np.zeros_like(t) for t in model.layers]
    vel = [np.zeros_like(t) for t in model.layers]
    trace = np.zeros((hyper.epochs + 1, 3))
    for epoch in range(hyper.epochs):
        H_l = gcn_forward(model, g_c, S_tilde, H_0)[-1]
        trace[epoch] = losses(H_0, H_l, mask, hyper.lambda_r)
        if not np.all(np.isfinite(trace[epoch])):
            raise NumericError(
                f"training diverged at epoch {epoch}: L_u={trace[epoch][0]}, "
                f"L_f={trace[epoch][1]}")
        grads = gradients(model, g_c, S_tilde, H_0, mask, hyper.lambda_r)
        t = epoch + 1
        for i, grad in enumerate(grads):
            mom[i] = beta1 * mom[i] + (1.0 - beta1) * grad
            vel[i] = beta2 * vel[i] + (1.0 - beta2) * grad * grad
            m_hat = mom[i] / (1.0 - beta1 ** t)
            v_hat = vel[i] / (1.0 - beta2 ** t)
            model.layers[i] = model.layers[i] - hyper.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    H_l = gcn_forward(model, g_c, S_tilde, H_0)[-1]
    trace[hyper.epochs] = losses(H_0, H_l, mask, hyper.lambda_r)
    if not np.all(np.isfinite(trace[hyper.epochs])):
        raise NumericError("training diverged on the final step")
    return model, trace


def refine_all(h: Hierarchy, E_c: Embedding, model: RefinementModel) -> Embedding:
    """Lift the coarsest embedding down to level 0.

    At each level the parent rows are copied to children, passed through the
    model, and row-normalized, per the convention that only emitted
    embeddings are normalized. With c=0 the model is applied once to the
    original graph.
    """
    if h.c == 0:
        g, attrs = h.graphs[0], h.attrs[0]
        H_l = gcn_forward(model, g, row_normalize(attrs.S), E_c.E)[-1]
        return Embedding(l2_normalize_rows(H_l), model.d, normalized=True)
    E_cur = E_c.E
    for i in range(h.c - 1, -1, -1):
        H_0 = project(E_cur, h.merges[i])
        H_l = gcn_forward(model, h.graphs[i], row_normalize(h.attrs[i].S), H_0)[-1]
        E_cur = l2_normalize_rows(H_l)
    return Embedding(E_cur, model.d, normalized=True)


def theorem1_check(E: Embedding, groups: np.ndarray, g: Graph,
                   tol: float = 1e-3) -> dict:
    """Compare group-mean embedding distances against the connectivity bound.

    For groups p, q: lhs = ||mu_p - mu_q||_2 and bound = 2 (1 - min(beta_p,
    beta_q)) where beta_i is the fraction of group-i nodes with at least one
    inter-group edge. Requires normalized embeddings, since the bound comes
    from unit rows.
    """
    groups = np.asarray(groups)
    if groups.shape[0] != E.E.shape[0]:
        raise DimensionMismatch("group labels do not match embedding rows")
    if not E.normalized:
        raise InputError("theorem check needs a row-normalized embedding")
    values = np.unique(groups)
    if values.size < 2:
        raise InputError("need at least two groups")

    beta = {}
    for val in values:
        members = np.where(groups == val)[0]
        has_inter = 0
        for u in members:
            nbrs = g.neighbors(u)
            if np.any(groups[nbrs[nbrs != u]] != val):
                has_inter += 1
        beta[val] = has_inter / members.size

    means = {val: E.E[groups == val].mean(axis=0) for val in values}
    pairs = []
    for a in range(values.size):
        for b in range(a + 1, values.size):
            p, q = values[a], values[b]
            lhs = float(np.linalg.norm(means[p] - means[q]))
            bound = 2.0 * (1.0 - min(beta[p], beta[q]))
            pairs.append({
                "group_p": p.item() if hasattr(p, "item") else p,
                "group_q": q.item() if hasattr(q, "item") else q,
                "lhs": lhs,
                "bound": bound,
                "satisfied": lhs <= bound + tol,
            })
    beta_out = {str(k.item() if hasattr(k, "item") else k): v for k, v in beta.items()}
    return {"pairs": pairs, "beta": beta_out, "tol": tol}


# -- persistence -------------------------------------------------------------

def save_model(model: RefinementModel, hyper: RefineHyper, path) -> None:
    """Write layer tensors to `<path>` (npz) and metadata to `<path>.json`."""
    arrays = {f"theta_{i}": theta for i, theta in enumerate(model.layers)}
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    sidecar = {
        "d": model.d,
        "m": model.m,
        "layers": [list(t.shape) for t in model.layers],
        "lambda_r": hyper.lambda_r,
        "gamma": hyper.gamma,
        "epochs": hyper.epochs,
        "learning_rate": hyper.learning_rate,
        "init_seed": hyper.init_seed,
    }
    with open(f"{path}.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path) -> tuple[RefinementModel, RefineHyper]:
    with open(f"{path}.json", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    data = np.load(path)
    layers = [data[f"theta_{i}"] for i in range(len(sidecar["layers"]))]
    model = RefinementModel(layers, sidecar["d"], sidecar["m"])
    hyper = RefineHyper(lambda_r=sidecar["lambda_r"], gamma=sidecar["gamma"],
                        epochs=sidecar["epochs"],
                        learning_rate=sidecar["learning_rate"],
                        init_seed=sidecar["init_seed"], layers=len(layers))
    return model, hyper


def write_loss_trace(trace: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,L_u,L_f,L\n")
        for epoch, (lu, lf, total) in enumerate(trace):
            fh.write(f"{epoch},{repr(float(lu))},{repr(float(lf))},{repr(float(total))}\n")
