"""Command-line interface.

Subcommands cover the full pipeline (``run``) and its decomposed stages
(``simulate``, ``build-layers``, ``tune-beta``, ``cluster``, ``evaluate``,
``baseline``, ``rank``). Every subcommand accepts ``--seed``, ``--out``
and ``--format json``; configuration comes from a YAML file whose values
individual flags override. Exit codes: 0 success, 1 validation error,
2 runtime failure; failures emit a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .baselines import (BASELINES, bloc_detector, coretweet_cardinality,
                        hashtag_sequences, rapid_retweets, ratcliff_obershelp,
                        synchronized_actions)
from .community import MultiplexNetwork, cluster_multiplex
from .errors import CoactnetError, ValidationError
from .ingest import load_ground_truth, parse_events
from .layers import LayerGraph, beta_grid, sweep_exponent_graph, sweep_to_csv
from .metrics import evaluate_flagged, evaluate_partition, random_labeler, \
    rank_methods
from .pipeline import (MERGED_LAYER, PipelineConfig, partition_from_csv,
                       partition_to_csv, run_pipeline)
from .synth import SimulationConfig, export_simulation, simulate

import numpy as np

DEFAULT_OUT_ENV = "COACTNET_OUT"


def _default_out() -> str:
    return os.environ.get(DEFAULT_OUT_ENV, "out")


def _load_config(args) -> PipelineConfig:
    if args.config:
        cfg = PipelineConfig.from_yaml(args.config)
    else:
        if not getattr(args, "events", None):
            raise ValidationError("either --config or --events is required")
        cfg = PipelineConfig(events_path=args.events)
    overrides = {}
    if getattr(args, "events", None):
        overrides["events_path"] = args.events
    if getattr(args, "ground_truth", None):
        overrides["ground_truth_path"] = args.ground_truth
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "time_unit", None):
        overrides["time_unit"] = args.time_unit
    if getattr(args, "eps", None) is not None:
        overrides["eps"] = args.eps
    if getattr(args, "gamma", None) is not None:
        overrides["gamma"] = args.gamma
    if getattr(args, "omega", None) is not None:
        overrides["omega"] = args.omega
    if getattr(args, "layers", None):
        overrides["layers"] = tuple(args.layers)
    if getattr(args, "grid_start", None) is not None:
        overrides["grid_start"] = args.grid_start
    if getattr(args, "grid_stop", None) is not None:
        overrides["grid_stop"] = args.grid_stop
    if getattr(args, "grid_step", None) is not None:
        overrides["grid_step"] = args.grid_step
    if overrides:
        cfg = replace(cfg, **overrides)
    if cfg.out_dir == "out" and args.out is None:
        cfg = replace(cfg, out_dir=_default_out())
    return cfg


def _emit(payload: dict, args) -> None:
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_pipeline(cfg)
    _emit({"out_dir": cfg.out_dir,
           "communities": result.partition.n_communities,
           "layers": {k: v.beta_star for k, v in result.sweeps.items()}}, args)
    return 0


def _cmd_build_layers(args) -> int:
    cfg = _load_config(args)
    result = run_pipeline(cfg, layers_only=True)
    _emit({"out_dir": cfg.out_dir,
           "layers": {k: v.beta_star for k, v in result.sweeps.items()}}, args)
    return 0


def _cmd_simulate(args) -> int:
    cfg = SimulationConfig(seed=args.seed if args.seed is not None else 0)
    dataset, gt = simulate(args.kind, seed=cfg.seed, cfg=cfg)
    out = Path(args.out or _default_out())
    paths = export_simulation(dataset, gt, out)
    _emit({"kind": args.kind, "seed": cfg.seed, "events": len(dataset),
           "users": len(dataset.users),
           "positives": len(gt.positives),
           **{k: str(v) for k, v in paths.items()}}, args)
    return 0


def _read_exponent_edges(path) -> list[tuple[str, str, float]]:
    edges = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"u", "v", "exponent"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ValidationError("exponent edge CSV needs columns u,v,exponent")
        for row in reader:
            edges.append((row["u"], row["v"], float(row["exponent"])))
    if not edges:
        raise ValidationError("exponent edge CSV is empty")
    return edges


def _cmd_tune_beta(args) -> int:
    seed = args.seed if args.seed is not None else 0
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    if args.exponent_edges:
        edges = _read_exponent_edges(args.exponent_edges)
        grid = beta_grid(args.grid_start or 0.0, args.grid_stop or 10.0,
                         args.grid_step or 0.01)
        sweep = sweep_exponent_graph(edges, grid,
                                     resolution=args.gamma or 1.0, seed=seed)
        sweep_to_csv(sweep, out / "sweep_parametric.csv")
        _emit({"beta_star": sweep.beta_star, "q_star": sweep.q_star,
               "sweep_csv": str(out / "sweep_parametric.csv")}, args)
        return 0
    cfg = _load_config(args)
    result = run_pipeline(cfg)
    _emit({name: {"beta_star": s.beta_star, "q_star": s.q_star}
           for name, s in result.sweeps.items()}, args)
    return 0


def _read_layer_csv(path, users: tuple[str, ...], name: str) -> LayerGraph:
    pos = {u: i for i, u in enumerate(users)}
    eu, ev, w = [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"u", "v", "weight"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ValidationError(f"{path}: layer CSV needs columns u,v,weight")
        for row in reader:
            for col in ("u", "v"):
                if row[col] not in pos:
                    raise ValidationError(
                        f"{path}: user {row[col]!r} is not in the user list")
            a, b = pos[row["u"]], pos[row["v"]]
            eu.append(min(a, b))
            ev.append(max(a, b))
            w.append(float(row["weight"]))
    return LayerGraph(action_type=name, beta=0.0, users=users,
                      edge_u=np.asarray(eu, np.int64),
                      edge_v=np.asarray(ev, np.int64),
                      weights=np.asarray(w, np.float64))


def _read_users_csv(path) -> tuple[str, ...]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "user" not in reader.fieldnames:
            raise ValidationError("users CSV needs a user column")
        return tuple(row["user"] for row in reader)


def _cmd_cluster(args) -> int:
    users = _read_users_csv(args.users)
    layers = tuple(
        _read_layer_csv(path, users, f"layer{i}")
        for i, path in enumerate(args.layer_csv))
    mx = MultiplexNetwork(layers=layers, omega=args.omega or 1.0,
                          gamma=args.gamma or 1.0)
    partition = cluster_multiplex(mx, seed=args.seed if args.seed is not None else 0)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    partition_to_csv(partition, out / "partition.csv")
    _emit({"partition_csv": str(out / "partition.csv"),
           "communities": partition.n_communities}, args)
    return 0


def _cmd_evaluate(args) -> int:
    partition = partition_from_csv(args.partition)
    gt = load_ground_truth(args.ground_truth)
    report = evaluate_partition(partition, gt)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "evaluation.json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    print(report.to_json())
    return 0


def _cmd_baseline(args) -> int:
    dataset = parse_events(args.events, fmt=args.input_format)
    seed = args.seed if args.seed is not None else 0
    name = args.name
    if name == "hashtag-sequences":
        result = hashtag_sequences(dataset)
    elif name == "rapid-retweets":
        result = rapid_retweets(dataset, interval_s=args.interval)
    elif name == "coretweet-cardinality":
        result = coretweet_cardinality(dataset, alpha=args.alpha,
                                       overlap_k=args.overlap)
    elif name == "ratcliff-obershelp":
        result = ratcliff_obershelp(dataset, threshold=args.threshold)
    elif name == "synchronized-actions":
        if not args.action_type:
            raise ValidationError("synchronized-actions needs --action-type")
        result = synchronized_actions(dataset, args.action_type,
                                      filtering=args.filtering, seed=seed)
    elif name == "bloc":
        result = bloc_detector(dataset, seed=seed)
    else:
        raise ValidationError(f"unknown baseline {name!r}")
    payload = json.loads(result.to_json())
    if args.ground_truth:
        gt = load_ground_truth(args.ground_truth)
        if result.kind == "flagged_set":
            report = evaluate_flagged(result.flagged, sorted(dataset.users), gt)
        else:
            report = evaluate_partition(result.partition, gt)
        payload["evaluation"] = json.loads(report.to_json())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"baseline_{name}.json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True) + "\n")
    print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_random_labeler(args) -> int:
    stats = random_labeler(args.users, args.positives, args.clusters,
                           reps=args.reps,
                           seed=args.seed if args.seed is not None else 0)
    print(stats.to_json())
    return 0


def _cmd_rank(args) -> int:
    scores: dict[str, dict[str, float]] = {}
    for path in args.score_files:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            needed = {"method", "dataset", args.metric}
            if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
                raise ValidationError(
                    f"{path}: score CSV needs columns method,dataset,{args.metric}")
            for row in reader:
                scores.setdefault(row["method"], {})[row["dataset"]] = \
                    float(row[args.metric])
    ranks = rank_methods(scores, higher_is_better=not args.lower_is_better)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    path = out / "average_ranks.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "average_rank"])
        for method, rank in sorted(ranks.items(), key=lambda kv: (kv[1], kv[0])):
            writer.writerow([method, repr(rank)])
    _emit({"ranks_csv": str(path), **{m: r for m, r in ranks.items()}}, args)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None,
                   help=f"output directory (default ${DEFAULT_OUT_ENV} or ./out)")
    p.add_argument("--format", choices=("text", "json"), default="text")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="YAML pipeline config")
    p.add_argument("--events", default=None)
    p.add_argument("--ground-truth", dest="ground_truth", default=None)
    p.add_argument("--layers", nargs="+", default=None,
                   help=f"action types, or '{MERGED_LAYER}' for one merged layer")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--time-unit", dest="time_unit",
                   choices=("seconds", "minutes", "hours"), default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--grid-start", dest="grid_start", type=float, default=None)
    p.add_argument("--grid-stop", dest="grid_stop", type=float, default=None)
    p.add_argument("--grid-step", dest="grid_step", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coactnet",
        description="Coordinated-group detection via time-aware multiplex "
                    "co-action networks")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline from a config file")
    _add_config_flags(p); _add_common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("build-layers", help="ingest, tune and export layers")
    _add_config_flags(p); _add_common(p)
    p.set_defaults(func=_cmd_build_layers)

    p = sub.add_parser("simulate", help="generate a synthetic campaign dataset")
    p.add_argument("kind", type=int, choices=(1, 2, 3))
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tune-beta", help="decay-rate sweep (config or exponent graph)")
    _add_config_flags(p)
    p.add_argument("--exponent-edges", default=None,
                   help="CSV u,v,exponent for a parametric weight sweep")
    _add_common(p)
    p.set_defaults(func=_cmd_tune_beta)

    p = sub.add_parser("cluster", help="cluster exported layer CSVs as a multiplex")
    p.add_argument("--users", required=True, help="users.csv from build-layers")
    p.add_argument("--layer-csv", dest="layer_csv", nargs="+", required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("evaluate", help="score a partition CSV against ground truth")
    p.add_argument("--partition", required=True)
    p.add_argument("--ground-truth", dest="ground_truth", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("baseline", help="run a reference detector")
    p.add_argument("name", choices=sorted(BASELINES))
    p.add_argument("--events", required=True)
    p.add_argument("--input-format", dest="input_format", default="jsonl")
    p.add_argument("--ground-truth", dest="ground_truth", default=None)
    p.add_argument("--interval", type=float, default=60.0,
                   help="rapid-retweets interval in seconds")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--overlap", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--action-type", dest="action_type", default=None)
    p.add_argument("--filtering", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("random-labeler", help="statistical reference baseline")
    p.add_argument("--users", type=int, default=46)
    p.add_argument("--positives", type=int, default=6)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--reps", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=_cmd_random_labeler)

    p = sub.add_parser("rank", help="average ranks across method-score CSVs")
    p.add_argument("score_files", nargs="+")
    p.add_argument("--metric", default="f1_star")
    p.add_argument("--lower-is-better", dest="lower_is_better",
                   action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_rank)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}), file=sys.stderr)
        return 1
    except CoactnetError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
