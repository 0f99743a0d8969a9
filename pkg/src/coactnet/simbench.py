"""Reproduction of the synthetic-campaign score table.

For each of the three simulated patterns this builds one merged co-action
layer (decay rate tuned by modularity sweep, kernel in 1/minutes), scores
its monoplex clustering, and then scores every multi-layer combination of
the per-simulation layers clustered as a multiplex network. The expected
outcome: patterns 1 and 2 recover the campaign exactly; pattern 3 splits
its alternating subsets in the monoplex view (best-cluster F1 of 2/3 with
fully pure clusters) and is repaired by any combination of layers.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .community import MultiplexNetwork, cluster_multiplex
from .ingest import GroundTruth, build_combined_index
from .layers import DeltaTable, LayerGraph, beta_grid, tune_beta
from .metrics import EvalReport, evaluate_partition
from .synth import SimulationConfig, simulate

SIM_KINDS = (1, 2, 3)
DEFAULT_BASE_SEED = 0
MINUTES_S = 60.0


def simulation_seed(base_seed: int, kind: int) -> int:
    """Per-pattern seed derivation used by the shipped benchmark."""
    return base_seed * 100 + kind


@dataclass(frozen=True)
class SimBenchResult:
    rows: dict[str, EvalReport]
    betas: dict[int, float]

    def meets_expectations(self) -> bool:
        """The published outcome, checked to two decimals on every row."""
        for name, rep in self.rows.items():
            want_f1 = 0.67 if name == "sim3" else 1.0
            if round(rep.f1_star, 2) != want_f1:
                return False
            if round(rep.homogeneity, 2) != 1.0 or round(rep.weighted_precision, 2) != 1.0:
                return False
        return True


def run_sim_benchmark(base_seed: int = DEFAULT_BASE_SEED, seed: int = 0,
                      grid=None, eps: float = 1e-6,
                      cfg: SimulationConfig | None = None) -> SimBenchResult:
    """Monoplex and multiplex scores for the three simulated patterns.

    ``base_seed`` controls the generated data; ``seed`` the clustering.
    Row keys: "sim1", "sim2", "sim3" for the monoplex runs and
    "sim1+sim2", ..., "sim1+sim2+sim3" for the multiplex combinations
    (multiplex rows are scored against the shared ground truth).
    """
    if grid is None:
        grid = beta_grid(0.0, 10.0, 0.01)
    layers: dict[int, LayerGraph] = {}
    gt: GroundTruth | None = None
    rows: dict[str, EvalReport] = {}
    betas: dict[int, float] = {}
    for kind in SIM_KINDS:
        sim_cfg = cfg if cfg is not None else SimulationConfig()
        dataset, gt_k = simulate(kind, seed=simulation_seed(base_seed, kind),
                                 cfg=sim_cfg)
        index = build_combined_index(dataset)
        universe = tuple(sorted(dataset.users))
        sweep = tune_beta(index, grid, eps=eps, seed=seed, universe=universe,
                          time_unit_s=MINUTES_S)
        betas[kind] = sweep.beta_star
        table = DeltaTable.from_index(index, universe)
        layers[kind] = table.layer_at(sweep.beta_star, eps, f"sim{kind}",
                                      MINUTES_S)
        rows[f"sim{kind}"] = evaluate_partition(sweep.partition_at_star, gt_k)
        gt = gt_k  # identical user universe and positives across patterns
    for size in (2, 3):
        for combo in combinations(SIM_KINDS, size):
            mx = MultiplexNetwork(layers=tuple(layers[k] for k in combo))
            partition = cluster_multiplex(mx, seed=seed)
            rows["+".join(f"sim{k}" for k in combo)] = \
                evaluate_partition(partition, gt)
    return SimBenchResult(rows=rows, betas=betas)
