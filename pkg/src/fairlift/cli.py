"""Command-line interface.

Every subcommand accepts --seed and --config <file>; the config file holds
key=value pairs named after the long flags (dashes become underscores), and
explicit flags win over the file. Exit status: 0 success, 2 bad input,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .attributes import encode_one_hot, read_attribute_table
from .config import read_config
from .coarsen import coarsen_hierarchy, load_hierarchy, save_hierarchy
from .downstream import lp_evaluate, lp_split, nc_evaluate, read_labels
from .embed import (Embedding, EmbedderConfig, embed, read_embedding,
                    write_embedding)
from .errors import InputError, NumericError
from .graph import read_edge_list
from .pipeline import PipelineConfig, bench, run_pipeline
from .refine import (RefineHyper, refine_all, save_model, theorem1_check,
                     train_refiner, write_loss_trace)
from .synth import SyntheticSpec, generate_synthetic

EMBED_DEFAULTS = {
    "kind": "spectral",
    "d": 128,
    "walks_per_node": 10,
    "walk_length": 80,
    "window": 10,
    "negatives": 5,
    "embed_epochs": 1,
    "initial_lr": 0.025,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value file; flags override")


def _add_embedder_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=["spectral", "deepwalk"], default=None,
                   help="base embedder")
    p.add_argument("--d", type=int, default=None, help="embedding dimension")
    p.add_argument("--walks-per-node", type=int, default=None)
    p.add_argument("--walk-length", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--embed-epochs", type=int, default=None)
    p.add_argument("--initial-lr", type=float, default=None)


def _coerce(text: str, like):
    if isinstance(like, bool):
        if text.lower() in ("1", "true", "yes"):
            return True
        if text.lower() in ("0", "false", "no"):
            return False
        raise InputError(f"expected a boolean, got {text!r}")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    if isinstance(like, tuple):
        return tuple(float(x) for x in text.split(","))
    return text


def _merge(args: argparse.Namespace, defaults: dict, required: tuple = ()) -> dict:
    """Defaults < config file < explicit flags."""
    file_cfg = read_config(args.config) if args.config else {}
    out = {}
    for key, default in defaults.items():
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            out[key] = cli_val
        elif key in file_cfg:
            like = default if default is not None else ""
            out[key] = _coerce(file_cfg[key], like)
        else:
            out[key] = default
    for key in required:
        if not out.get(key):
            raise InputError(f"missing required option --{key.replace('_', '-')}")
    return out


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_graph_attrs(edges_path, attrs_path):
    # the attrs table defines the node universe; the edge file alone would
    # drop isolated nodes
    table, schema = read_attribute_table(attrs_path)
    g = read_edge_list(edges_path, nodes=list(table))
    return g, encode_one_hot(table, schema, g.node_names)


def _parse_levels(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


# -- subcommand bodies -------------------------------------------------------

def cmd_synth(args) -> int:
    opts = _merge(args, {
        "out_dir": None, "kind": "sbm", "n": 100, "blocks": 2,
        "p_intra": 0.1, "p_inter": 0.01, "rho": 0.0, "n_classes": 2,
        "label_noise": 0.0, "label_skew": 0.0, "group_boost": 0.0, "seed": 0,
    }, required=("out_dir",))
    spec = SyntheticSpec(**{k: v for k, v in opts.items() if k != "out_dir"})
    edges, attrs, labels = generate_synthetic(spec, opts["out_dir"])
    _emit({"edges": edges, "attrs": attrs, "labels": labels}, None)
    return 0


def cmd_coarsen(args) -> int:
    opts = _merge(args, {
        "edges": None, "attrs": None, "out_dir": None,
        "levels": 1, "lambda_c": 0.5, "seed": 0,
    }, required=("edges", "attrs", "out_dir"))
    g, attrs = _load_graph_attrs(opts["edges"], opts["attrs"])
    h = coarsen_hierarchy(g, attrs, opts["levels"], opts["lambda_c"])
    save_hierarchy(h, opts["out_dir"])
    _emit({"levels": [{"nodes": gi.n, "edges": gi.num_edges} for gi in h.graphs],
           "out_dir": opts["out_dir"]}, None)
    return 0


def cmd_embed(args) -> int:
    opts = _merge(args, {
        "edges": None, "out": None, "seed": 0, **EMBED_DEFAULTS,
    }, required=("edges", "out"))
    g = read_edge_list(opts["edges"])
    cfg = EmbedderConfig(kind=opts["kind"], d=opts["d"], seed=opts["seed"],
                         walks_per_node=opts["walks_per_node"],
                         walk_length=opts["walk_length"], window=opts["window"],
                         negatives=opts["negatives"], epochs=opts["embed_epochs"],
                         initial_lr=opts["initial_lr"])
    emb = embed(g, cfg)
    write_embedding(opts["out"], emb, g.node_names)
    _emit({"out": opts["out"], "nodes": g.n, "d": emb.d}, None)
    return 0


def cmd_refine(args) -> int:
    opts = _merge(args, {
        "hierarchy": None, "embedding": None, "out": None,
        "lambda_r": 0.5, "gamma": 0.5, "epochs": 200, "learning_rate": 1e-3,
        "layers": 2, "seed": 0, "lambda_c": 0.5,
        "model_out": "", "loss_trace": "",
    }, required=("hierarchy", "embedding", "out"))
    h = load_hierarchy(opts["hierarchy"], opts["lambda_c"])
    E_c, emb_names = read_embedding(opts["embedding"])
    g_c, attrs_c = h.coarsest
    want = [str(x) for x in g_c.node_names]
    if sorted(emb_names) != sorted(want):
        raise InputError("embedding nodes do not match the coarsest level")
    if emb_names != want:
        # embedding files list nodes in edge-file appearance order; align
        # rows with the hierarchy before training on them
        pos = {name: i for i, name in enumerate(emb_names)}
        E_c = Embedding(E_c.E[[pos[name] for name in want]], E_c.d,
                        normalized=E_c.normalized)
    hyper = RefineHyper(lambda_r=opts["lambda_r"], gamma=opts["gamma"],
                        epochs=opts["epochs"], learning_rate=opts["learning_rate"],
                        init_seed=opts["seed"], layers=opts["layers"])
    model, trace = train_refiner(g_c, attrs_c, E_c, hyper)
    E_0 = refine_all(h, E_c, model)
    names = h.graphs[0].node_names or [str(i) for i in range(h.graphs[0].n)]
    write_embedding(opts["out"], E_0, names)
    if opts["model_out"]:
        save_model(model, hyper, opts["model_out"])
    if opts["loss_trace"]:
        write_loss_trace(trace, opts["loss_trace"])
    _emit({"out": opts["out"], "final_loss": float(trace[-1, 2])}, None)
    return 0


def cmd_eval_nc(args) -> int:
    opts = _merge(args, {
        "embedding": None, "labels": None, "attrs": None,
        "split": (0.5, 0.25, 0.25), "seed": 0, "y_plus": "", "out": "",
    }, required=("embedding", "labels", "attrs"))
    emb, names = read_embedding(opts["embedding"])
    table, schema = read_attribute_table(opts["attrs"])
    attrs = encode_one_hot(table, schema, names)
    label_map = read_labels(opts["labels"])
    try:
        labels = np.asarray([label_map[n] for n in names])
    except KeyError as missing:
        raise InputError(f"labels file missing node {missing.args[0]!r}") from None
    groups = {a: attrs.dominant_value(a) for a in attrs.attribute_names()}
    y_plus = tuple(x for x in str(opts["y_plus"]).split(",") if x != "")
    split = opts["split"]
    if isinstance(split, str):
        split = tuple(float(x) for x in split.split(","))
    report = nc_evaluate(emb.E, labels, groups, split, opts["seed"], y_plus)
    _emit({"utility": report.utility, "fairness": report.fairness},
          opts["out"] or None)
    return 0


def cmd_eval_lp(args) -> int:
    opts = _merge(args, {
        "edges": None, "embedding": None, "attrs": None,
        "ratio": 0.10, "seed": 0, "out": "",
    }, required=("edges", "embedding", "attrs"))
    g, attrs = _load_graph_attrs(opts["edges"], opts["attrs"])
    emb, names = read_embedding(opts["embedding"])
    if names != [str(x) for x in g.node_names]:
        raise InputError("embedding node order does not match the edge file")
    groups = {a: attrs.dominant_value(a) for a in attrs.attribute_names()}
    split = lp_split(g, opts["ratio"], opts["seed"])
    report = lp_evaluate(emb.E, split, groups)
    _emit({"utility": report.utility, "fairness": report.fairness},
          opts["out"] or None)
    return 0


def cmd_pipeline(args) -> int:
    opts = _merge(args, {
        "edges": None, "attrs": None, "labels": "", "out_dir": "out",
        "task": "nc", "levels": 2, "lambda_c": 0.5, "lambda_r": 0.5,
        "gamma": 0.5, "seed": 0, "epochs": 200, "learning_rate": 1e-3,
        "layers": 2, "lp_ratio": 0.10, "split": (0.5, 0.25, 0.25),
        "y_plus": "", **EMBED_DEFAULTS,
    }, required=("edges", "attrs"))
    split = opts["split"]
    if isinstance(split, str):
        split = tuple(float(x) for x in split.split(","))
    y_plus = tuple(x for x in str(opts["y_plus"]).split(",") if x != "")
    cfg = PipelineConfig(
        edges=opts["edges"], attrs=opts["attrs"], labels=opts["labels"],
        out_dir=opts["out_dir"], task=opts["task"], c=opts["levels"],
        lambda_c=opts["lambda_c"], lambda_r=opts["lambda_r"], gamma=opts["gamma"],
        d=opts["d"], embedder=opts["kind"], seed=opts["seed"],
        epochs=opts["epochs"], learning_rate=opts["learning_rate"],
        layers=opts["layers"], lp_ratio=opts["lp_ratio"], split_ratio=split,
        y_plus=y_plus, walks_per_node=opts["walks_per_node"],
        walk_length=opts["walk_length"], window=opts["window"],
        negatives=opts["negatives"], embed_epochs=opts["embed_epochs"],
        initial_lr=opts["initial_lr"])
    result = run_pipeline(cfg)
    _emit(result.report, None)
    return 0


def cmd_check_theorem1(args) -> int:
    opts = _merge(args, {
        "embedding": None, "edges": None, "attrs": None, "attr": "",
        "tol": 1e-3, "seed": 0, "out": "",
    }, required=("embedding", "edges", "attrs"))
    g, attrs = _load_graph_attrs(opts["edges"], opts["attrs"])
    emb, names = read_embedding(opts["embedding"])
    if names != [str(x) for x in g.node_names]:
        raise InputError("embedding node order does not match the edge file")
    attr = opts["attr"] or attrs.attribute_names()[0]
    report = theorem1_check(emb, attrs.dominant_value(attr), g, opts["tol"])
    _emit(report, opts["out"] or None)
    return 0


def cmd_bench(args) -> int:
    opts = _merge(args, {
        "edges": None, "attrs": None, "levels": "0..4", "out": "",
        "lambda_c": 0.5, "lambda_r": 0.5, "gamma": 0.5, "seed": 0,
        "epochs": 200, "learning_rate": 1e-3, "layers": 2, **EMBED_DEFAULTS,
    }, required=("edges", "attrs"))
    cfg = PipelineConfig(
        edges=opts["edges"], attrs=opts["attrs"], out_dir=".", task="nc",
        c=0, lambda_c=opts["lambda_c"], lambda_r=opts["lambda_r"],
        gamma=opts["gamma"], d=opts["d"], embedder=opts["kind"],
        seed=opts["seed"], epochs=opts["epochs"],
        learning_rate=opts["learning_rate"], layers=opts["layers"],
        walks_per_node=opts["walks_per_node"], walk_length=opts["walk_length"],
        window=opts["window"], negatives=opts["negatives"],
        embed_epochs=opts["embed_epochs"], initial_lr=opts["initial_lr"])
    levels = _parse_levels(str(opts["levels"]))
    rows = bench(cfg, levels)
    lines = ["level,nodes,edges,coarsen_s,embed_s,refine_s,total_s"]
    for row in rows:
        lines.append("{level},{nodes},{edges},{coarsen_s:.6f},{embed_s:.6f},"
                     "{refine_s:.6f},{total_s:.6f}".format(**row))
    text = "\n".join(lines) + "\n"
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairlift",
        description="Multi-level fair graph embedding: coarsen, embed, refine, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic attributed graph")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--kind", choices=["sbm", "erdos"], default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--blocks", type=int, default=None)
    p.add_argument("--p-intra", type=float, default=None)
    p.add_argument("--p-inter", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--n-classes", type=int, default=None)
    p.add_argument("--label-noise", type=float, default=None)
    p.add_argument("--label-skew", type=float, default=None)
    p.add_argument("--group-boost", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("coarsen", help="build and save a coarsening hierarchy")
    p.add_argument("--edges", default=None)
    p.add_argument("--attrs", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--lambda-c", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_coarsen)

    p = sub.add_parser("embed", help="embed a graph with a base embedder")
    p.add_argument("--edges", default=None)
    p.add_argument("--out", default=None)
    _add_embedder_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("refine", help="train the refiner and lift an embedding to level 0")
    p.add_argument("--hierarchy", default=None)
    p.add_argument("--embedding", default=None, help="coarsest-level embedding file")
    p.add_argument("--out", default=None)
    p.add_argument("--lambda-r", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--model-out", default=None)
    p.add_argument("--loss-trace", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval-nc", help="node-classification metrics for an embedding")
    p.add_argument("--embedding", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--attrs", default=None)
    p.add_argument("--split", default=None, help="train,val,test fractions")
    p.add_argument("--y-plus", default=None, help="comma-separated advantaged labels")
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_eval_nc)

    p = sub.add_parser("eval-lp", help="link-prediction metrics for an embedding")
    p.add_argument("--edges", default=None)
    p.add_argument("--embedding", default=None)
    p.add_argument("--attrs", default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_eval_lp)

    p = sub.add_parser("pipeline", help="full coarsen/embed/refine/evaluate run")
    p.add_argument("--edges", default=None)
    p.add_argument("--attrs", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--task", choices=["nc", "lp"], default=None)
    p.add_argument("--levels", type=int, default=None, help="coarsen level c")
    p.add_argument("--lambda-c", type=float, default=None)
    p.add_argument("--lambda-r", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--lp-ratio", type=float, default=None)
    p.add_argument("--split", default=None)
    p.add_argument("--y-plus", default=None)
    _add_embedder_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("check-theorem1", help="group-mean distance vs connectivity bound")
    p.add_argument("--embedding", default=None)
    p.add_argument("--edges", default=None)
    p.add_argument("--attrs", default=None)
    p.add_argument("--attr", default=None, help="attribute name; default: first")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_check_theorem1)

    p = sub.add_parser("bench", help="phase timings over a range of coarsen levels")
    p.add_argument("--edges", default=None)
    p.add_argument("--attrs", default=None)
    p.add_argument("--levels", default=None, help="e.g. 0..4 or 0,2,4")
    p.add_argument("--lambda-c", type=float, default=None)
    p.add_argument("--lambda-r", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_embedder_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
