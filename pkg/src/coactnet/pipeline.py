"""End-to-end orchestration: ingest, per-layer tuning, clustering, scoring.

A declarative YAML config drives the run; every artifact lands in the
output directory and a manifest records the config hash, seed and tool
version so runs are reproducible. All outputs are deterministic functions
of (config, seed): reruns produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from . import __version__
from .community import (MultiplexNetwork, Partition, cluster_multiplex,
                        modularity, multislice_modularity, coupling_offset)
from .errors import ValidationError
from .ingest import (Dataset, GroundTruth, build_action_index,
                     build_combined_index, load_ground_truth, parse_events)
from .layers import (BetaSweepResult, DeltaTable, beta_grid, layer_to_edge_csv,
                     layer_to_graphml, sweep_to_csv, tune_beta)
from .metrics import evaluate_partition

TIME_UNITS_S = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0}

MERGED_LAYER = "all"


@dataclass(frozen=True)
class PipelineConfig:
    """Validated configuration for one pipeline run."""

    events_path: str
    input_format: str = "jsonl"
    ground_truth_path: str | None = None
    field_map: Mapping[str, str] | None = None
    action_types: tuple[str, ...] | None = None
    layers: tuple[str, ...] = (MERGED_LAYER,)
    eps: float = 1e-6
    time_unit: str = "minutes"
    grid_start: float = 0.0
    grid_stop: float = 10.0
    grid_step: float = 0.01
    gamma: float = 1.0
    omega: float = 1.0
    method: str = "leiden"
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.input_format not in ("jsonl", "csv"):
            raise ValidationError(f"unknown input format {self.input_format!r}")
        if not (0 < self.eps <= 1):
            raise ValidationError("eps must be in (0, 1]")
        if self.time_unit not in TIME_UNITS_S:
            raise ValidationError(
                f"time_unit must be one of {sorted(TIME_UNITS_S)}")
        if self.grid_start < 0 or self.grid_step <= 0 or self.grid_stop < self.grid_start:
            raise ValidationError("beta grid must have start >= 0, step > 0, stop >= start")
        if not self.layers:
            raise ValidationError("at least one layer must be declared")
        if self.action_types is not None and len(self.action_types) == 0:
            raise ValidationError("declared action-type set must be non-empty")
        for name in self.layers:
            if name != MERGED_LAYER and self.action_types is not None \
                    and name not in self.action_types:
                raise ValidationError(
                    f"layer {name!r} is not in the declared action types")

    @classmethod
    def from_mapping(cls, raw: Mapping) -> "PipelineConfig":
        inp = raw.get("input", {})
        kernel = raw.get("kernel", {})
        grid = raw.get("beta_grid", {})
        clustering = raw.get("clustering", {})
        output = raw.get("output", {})
        events = inp.get("events")
        if not events:
            raise ValidationError("config is missing input.events")
        action_types = raw.get("action_types")
        if action_types is not None:
            action_types = tuple(action_types)
        layers = raw.get("layers") or [MERGED_LAYER]
        return cls(
            events_path=str(events),
            input_format=inp.get("format", "jsonl"),
            ground_truth_path=inp.get("ground_truth"),
            field_map=inp.get("fields"),
            action_types=action_types,
            layers=tuple(layers),
            eps=float(kernel.get("eps", 1e-6)),
            time_unit=kernel.get("time_unit", "minutes"),
            grid_start=float(grid.get("start", 0.0)),
            grid_stop=float(grid.get("stop", 10.0)),
            grid_step=float(grid.get("step", 0.01)),
            gamma=float(clustering.get("gamma", 1.0)),
            omega=float(clustering.get("omega", 1.0)),
            method=clustering.get("method", "leiden"),
            seed=int(raw.get("seed", 0)),
            out_dir=str(output.get("dir", "out")),
        )

    @classmethod
    def from_yaml(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ValidationError("config file must hold a mapping")
        return cls.from_mapping(raw)

    def config_hash(self) -> str:
        canon = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class PipelineResult:
    partition: Partition
    sweeps: dict[str, BetaSweepResult]
    report: dict
    artifacts: list[Path] = field(default_factory=list)


def _build_index(dataset: Dataset, layer_name: str):
    if layer_name == MERGED_LAYER:
        return build_combined_index(dataset)
    return build_action_index(dataset, layer_name)


def users_to_csv(users: Sequence[str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user"])
        for u in users:
            writer.writerow([u])


def partition_to_csv(partition: Partition, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "community"])
        for u, lab in zip(partition.users, partition.labels):
            writer.writerow([u, lab])


def partition_from_csv(path) -> Partition:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "user" not in reader.fieldnames \
                or "community" not in reader.fieldnames:
            raise ValidationError("partition CSV needs columns user,community")
        assignment = {row["user"]: int(row["community"]) for row in reader}
    if not assignment:
        raise ValidationError("partition CSV is empty")
    return Partition.from_assignment(assignment)


def run_pipeline(cfg: PipelineConfig, layers_only: bool = False) -> PipelineResult:
    """Execute the pipeline and write artifacts under cfg.out_dir.

    Per layer: a decay-rate sweep (CSV), the tuned collaboration graph
    (GraphML and edge CSV); then - unless ``layers_only`` - the multiplex
    partition (CSV), a JSON report with community sizes and achieved
    modularity, an evaluation report when ground truth is configured, and
    a manifest. On failure all files written so far are removed.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def track(path: Path) -> Path:
        written.append(path)
        return path

    try:
        dataset = parse_events(cfg.events_path, fmt=cfg.input_format,
                               field_map=cfg.field_map,
                               action_types=cfg.action_types)
        gt: GroundTruth | None = None
        if cfg.ground_truth_path:
            gt = load_ground_truth(cfg.ground_truth_path)
        universe = tuple(sorted(dataset.users))
        grid = beta_grid(cfg.grid_start, cfg.grid_stop, cfg.grid_step)
        unit_s = TIME_UNITS_S[cfg.time_unit]

        users_to_csv(universe, track(out / "users.csv"))
        layer_graphs = []
        sweeps: dict[str, BetaSweepResult] = {}
        for name in cfg.layers:
            index = _build_index(dataset, name)
            sweep = tune_beta(index, grid, eps=cfg.eps, resolution=cfg.gamma,
                              seed=cfg.seed, universe=universe, time_unit_s=unit_s)
            sweeps[name] = sweep
            table = DeltaTable.from_index(index, universe)
            layer = table.layer_at(sweep.beta_star, cfg.eps, name, unit_s)
            layer_graphs.append(layer)
            sweep_to_csv(sweep, track(out / f"sweep_{name}.csv"))
            layer_to_edge_csv(layer, track(out / f"layer_{name}.csv"))
            layer_to_graphml(layer, track(out / f"layer_{name}.graphml"))

        if layers_only:
            return PipelineResult(
                partition=Partition((), ()), sweeps=sweeps, report={},
                artifacts=list(written))

        mx = MultiplexNetwork(layers=tuple(layer_graphs), omega=cfg.omega,
                              gamma=cfg.gamma)
        partition = cluster_multiplex(mx, seed=cfg.seed, method=cfg.method)
        partition_to_csv(partition, track(out / "partition.csv"))

        report: dict = {
            "version": __version__,
            "layers": {
                name: {
                    "beta_star": sweeps[name].beta_star,
                    "q_star": sweeps[name].q_star,
                    "edges": layer_graphs[i].n_edges,
                    "total_weight": layer_graphs[i].total_weight(),
                }
                for i, name in enumerate(cfg.layers)
            },
            "community_sizes": partition.sizes(),
            "community_count": partition.n_communities,
            "multislice_modularity": multislice_modularity(mx, partition),
            "coupling_offset": coupling_offset(mx),
            "per_layer_modularity": {
                name: modularity(layer_graphs[i], partition, cfg.gamma)
                for i, name in enumerate(cfg.layers)
            },
        }
        if gt is not None:
            evaluation = evaluate_partition(partition, gt)
            report["evaluation"] = json.loads(evaluation.to_json())
            with open(track(out / "evaluation.json"), "w", encoding="utf-8") as fh:
                fh.write(evaluation.to_json() + "\n")
        with open(track(out / "report.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report, sort_keys=True) + "\n")

        manifest = {
            "tool": "coactnet",
            "version": __version__,
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "artifacts": sorted(p.name for p in written) + ["manifest.json"],
        }
        with open(track(out / "manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest, sort_keys=True) + "\n")
        return PipelineResult(partition=partition, sweeps=sweeps,
                              report=report, artifacts=list(written))
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
