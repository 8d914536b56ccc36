"""End-to-end orchestration: coarsen, embed, refine, evaluate.

The report JSON is fully determined by inputs and seeds; wall-clock numbers
go to a separate timings file so reports from identical runs stay
byte-identical.
"""

from __future__ import annotations

import json
import os
import shutil
import time
from dataclasses import dataclass, field

import numpy as np

from .attributes import AttributeMatrix, encode_one_hot, read_attribute_table
from .coarsen import coarsen_hierarchy, save_hierarchy
from .downstream import (EvalReport, lp_evaluate, lp_split, nc_evaluate,
                         read_labels)
from .embed import EmbedderConfig, embed, write_embedding
from .errors import InputError
from .graph import Graph, read_edge_list
from .refine import (RefineHyper, refine_all, save_model, train_refiner,
                     write_loss_trace)

__all__ = ["PipelineConfig", "PipelineResult", "run_pipeline", "bench"]


@dataclass
class PipelineConfig:
    edges: str = ""
    attrs: str = ""
    labels: str = ""
    out_dir: str = "out"
    task: str = "nc"
    c: int = 2
    lambda_c: float = 0.5
    lambda_r: float = 0.5
    gamma: float = 0.5
    d: int = 128
    embedder: str = "spectral"
    seed: int = 0
    epochs: int = 200
    learning_rate: float = 1e-3
    layers: int = 2
    lp_ratio: float = 0.10
    split_ratio: tuple = (0.5, 0.25, 0.25)
    y_plus: tuple = ()
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    negatives: int = 5
    embed_epochs: int = 1
    initial_lr: float = 0.025

    def __post_init__(self):
        if self.task not in ("nc", "lp"):
            raise InputError(f"unknown task {self.task!r}")
        if self.c < 0:
            raise InputError("coarsen level c must be >= 0")
        for name in ("lambda_c", "lambda_r", "gamma"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InputError(f"{name} must lie in [0, 1]")
        if self.d < 1:
            raise InputError("embedding dimension must be >= 1")

    def embedder_config(self) -> EmbedderConfig:
        return EmbedderConfig(kind=self.embedder, d=self.d, seed=self.seed,
                              walks_per_node=self.walks_per_node,
                              walk_length=self.walk_length, window=self.window,
                              negatives=self.negatives, epochs=self.embed_epochs,
                              initial_lr=self.initial_lr)


@dataclass
class PipelineResult:
    report: dict
    timings: dict
    E_0: np.ndarray
    paths: dict = field(default_factory=dict)


def _load_inputs(cfg: PipelineConfig) -> tuple[Graph, AttributeMatrix, np.ndarray | None]:
    # the attrs table defines the node universe; the edge file alone would
    # drop isolated nodes
    table, schema = read_attribute_table(cfg.attrs)
    g = read_edge_list(cfg.edges, nodes=list(table))
    attrs = encode_one_hot(table, schema, g.node_names)
    labels = None
    if cfg.labels:
        label_map = read_labels(cfg.labels)
        try:
            labels = np.asarray([label_map[name] for name in g.node_names])
        except KeyError as missing:
            raise InputError(f"label file missing node {missing.args[0]!r}") from None
    return g, attrs, labels


def _group_dict(attrs: AttributeMatrix) -> dict[str, np.ndarray]:
    return {name: attrs.dominant_value(name) for name in attrs.attribute_names()}


def run_pipeline(cfg: PipelineConfig, keep_outputs: bool = True) -> PipelineResult:
    """Execute the full flow and write artifacts under cfg.out_dir.

    For link prediction the test edges are held out before coarsening, so
    no phase ever sees them. On failure, files created by this run are
    removed.
    """
    g0, attrs0, labels = _load_inputs(cfg)
    if cfg.task == "nc" and labels is None:
        raise InputError("node classification needs a labels file")

    created: list[str] = []
    made_out_dir = not os.path.isdir(cfg.out_dir)
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
        timings: dict[str, float] = {}

        split = None
        work_graph = g0
        if cfg.task == "lp":
            split = lp_split(g0, cfg.lp_ratio, cfg.seed)
            work_graph = split.train_graph

        t0 = time.perf_counter()
        hierarchy = coarsen_hierarchy(work_graph, attrs0, cfg.c, cfg.lambda_c)
        timings["coarsen_s"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        g_c, attrs_c = hierarchy.coarsest
        E_c = embed(g_c, cfg.embedder_config())
        timings["embed_s"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        hyper = RefineHyper(lambda_r=cfg.lambda_r, gamma=cfg.gamma,
                            epochs=cfg.epochs, learning_rate=cfg.learning_rate,
                            init_seed=cfg.seed, layers=cfg.layers)
        model, trace = train_refiner(g_c, attrs_c, E_c, hyper)
        E_0 = refine_all(hierarchy, E_c, model)
        timings["refine_s"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        groups = _group_dict(attrs0)
        if cfg.task == "nc":
            report_metrics = nc_evaluate(E_0.E, labels, groups, cfg.split_ratio,
                                         cfg.seed, cfg.y_plus)
        else:
            report_metrics = lp_evaluate(E_0.E, split, groups)
        timings["eval_s"] = time.perf_counter() - t0
        timings["total_s"] = sum(timings.values())

        paths: dict[str, str] = {}
        if keep_outputs:
            hier_dir = os.path.join(cfg.out_dir, "hierarchy")
            if os.path.isdir(hier_dir):
                shutil.rmtree(hier_dir)
            save_hierarchy(hierarchy, hier_dir)
            created.append(hier_dir)
            paths["hierarchy"] = hier_dir

            names = work_graph.node_names or [str(i) for i in range(work_graph.n)]
            coarse_names = ([str(i) for i in range(g_c.n)] if cfg.c > 0 else names)
            for key, emb, emb_names in (("embedding_coarse", E_c, coarse_names),
                                        ("embedding", E_0, names)):
                path = os.path.join(cfg.out_dir, f"{key}.txt")
                write_embedding(path, emb, emb_names)
                created.append(path)
                paths[key] = path

            model_path = os.path.join(cfg.out_dir, "model.npz")
            save_model(model, hyper, model_path)
            created += [model_path, f"{model_path}.json"]
            paths["model"] = model_path

            trace_path = os.path.join(cfg.out_dir, "loss_trace.csv")
            write_loss_trace(trace, trace_path)
            created.append(trace_path)
            paths["loss_trace"] = trace_path

        report = build_report(cfg, hierarchy, report_metrics)
        if keep_outputs:
            report_path = os.path.join(cfg.out_dir, "report.json")
            with open(report_path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
            created.append(report_path)
            paths["report"] = report_path

            timings_path = os.path.join(cfg.out_dir, "timings.json")
            with open(timings_path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(timings, sort_keys=True, indent=2) + "\n")
            created.append(timings_path)
            paths["timings"] = timings_path
        return PipelineResult(report, timings, E_0.E, paths)
    except BaseException:
        for path in created:
            if os.path.isdir(path):
                shutil.rmtree(path, ignore_errors=True)
            elif os.path.exists(path):
                os.remove(path)
        if made_out_dir and os.path.isdir(cfg.out_dir) and not os.listdir(cfg.out_dir):
            os.rmdir(cfg.out_dir)
        raise


def build_report(cfg: PipelineConfig, hierarchy, metrics: EvalReport) -> dict:
    """Deterministic report body; no wall-clock values on purpose."""
    return {
        "task": cfg.task,
        "config": {
            "c": cfg.c,
            "lambda_c": cfg.lambda_c,
            "lambda_r": cfg.lambda_r,
            "gamma": cfg.gamma,
            "d": cfg.d,
            "embedder": cfg.embedder,
            "seed": cfg.seed,
            "epochs": cfg.epochs,
            "learning_rate": cfg.learning_rate,
            "layers": cfg.layers,
        },
        "levels": [{"nodes": g.n, "edges": g.num_edges}
                   for g in hierarchy.graphs],
        "utility": {k: float(v) for k, v in metrics.utility.items()},
        "fairness": {attr: {k: float(v) for k, v in vals.items()}
                     for attr, vals in metrics.fairness.items()},
    }


def bench(cfg: PipelineConfig, levels: list[int]) -> list[dict]:
    """Phase timings per coarsen level; eval is skipped, mirroring the
    coarsen/embed/refine cost structure."""
    g0, attrs0, _ = _load_inputs(cfg)
    rows = []
    for c in levels:
        t0 = time.perf_counter()
        hierarchy = coarsen_hierarchy(g0, attrs0, c, cfg.lambda_c)
        coarsen_s = time.perf_counter() - t0

        g_c, attrs_c = hierarchy.coarsest
        t0 = time.perf_counter()
        E_c = embed(g_c, cfg.embedder_config())
        embed_s = time.perf_counter() - t0

        t0 = time.perf_counter()
        hyper = RefineHyper(lambda_r=cfg.lambda_r, gamma=cfg.gamma,
                            epochs=cfg.epochs, learning_rate=cfg.learning_rate,
                            init_seed=cfg.seed, layers=cfg.layers)
        model, _ = train_refiner(g_c, attrs_c, E_c, hyper)
        refine_all(hierarchy, E_c, model)
        refine_s = time.perf_counter() - t0

        rows.append({
            "level": c,
            "nodes": g_c.n,
            "edges": g_c.num_edges,
            "coarsen_s": coarsen_s,
            "embed_s": embed_s,
            "refine_s": refine_s,
            "total_s": coarsen_s + embed_s + refine_s,
        })
    return rows
