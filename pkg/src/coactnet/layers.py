"""Per-modality collaboration graphs and decay-rate selection.

An edge weight between two users sums, over every content key they share
and every lag in their pair delta multiset, the decayed kernel value
normalized by the key's audience:

    w_uv = sum_k sum_{dt} exp(-beta * dt) / (n_k - 1)

Content keys with a single participant contribute nothing; pairs with zero
accumulated weight are omitted from the graph, and the node set always
spans the full user universe so layers stay aligned in a multiplex.

Because the lag multisets do not depend on beta, a sweep extracts them once
(two-pointer merges organized per content key, never all-pairs over the
universe) and re-evaluates only the decayed sums per grid point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from ._accel import decayed_sums_kernel, directed_deltas_kernel
from .community import Partition, detect_communities, modularity
from .errors import ContractViolationError, NoCoordinationEvidenceError
from .ingest import ActionIndex
from .kernel import truncation_bound

@dataclass(frozen=True)
class LayerGraph:
    """Weighted undirected user graph for one action type at a fixed beta.

    ``users`` is the full (sorted) universe; ``edge_u``/``edge_v`` hold
    index pairs with u < v and strictly positive weights. No self loops.
    """

    action_type: str
    beta: float
    users: tuple[str, ...]
    edge_u: np.ndarray
    edge_v: np.ndarray
    weights: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.weights.size)

    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def weight_between(self, u: str, v: str) -> float:
        iu, iv = self.users.index(u), self.users.index(v)
        lo, hi = min(iu, iv), max(iu, iv)
        mask = (self.edge_u == lo) & (self.edge_v == hi)
        return float(self.weights[mask].sum())

    def edge_items(self):
        for a, b, w in zip(self.edge_u, self.edge_v, self.weights):
            yield self.users[a], self.users[b], float(w)


class DeltaTable:
    """Beta-independent pair-lag table extracted from an ActionIndex.

    For every unordered pair sharing at least one content key with two or
    more participants, stores the flat lag array (seconds, ascending per
    pair) and the matching 1/(n_k - 1) coefficients.
    """

    def __init__(self, users: tuple[str, ...], pair_u, pair_v, deltas, coefs,
                 offsets):
        self.users = users
        self.pair_u = pair_u
        self.pair_v = pair_v
        self.deltas = deltas
        self.coefs = coefs
        self.offsets = offsets

    @classmethod
    def from_index(cls, index: ActionIndex,
                   universe: Sequence[str] | None = None) -> "DeltaTable":
        index_users = index.all_users()
        if universe is None:
            users = tuple(sorted(index_users))
        else:
            users = tuple(sorted(universe))
            if not index_users.issubset(users):
                raise ContractViolationError(
                    "universe must contain every user in the index")
        pos = {u: i for i, u in enumerate(users)}
        per_pair: dict[tuple[int, int], tuple[list, list]] = {}
        for content in index.contents():
            participants = index.users_of(content)
            n_k = len(participants)
            if n_k < 2:
                continue
            coef = 1.0 / (n_k - 1)
            for u, v in combinations(participants, 2):
                tu = index.timestamps(content, u)
                tv = index.timestamps(content, v)
                fwd = directed_deltas_kernel(tu, tv)
                bwd = directed_deltas_kernel(tv, tu)
                if fwd.size == 0 and bwd.size == 0:
                    continue
                iu, iv = pos[u], pos[v]
                key = (iu, iv) if iu < iv else (iv, iu)
                dts, cfs = per_pair.setdefault(key, ([], []))
                dts.append(fwd)
                dts.append(bwd)
                cfs.append(np.full(fwd.size + bwd.size, coef))
        n_pairs = len(per_pair)
        pair_u = np.empty(n_pairs, np.int64)
        pair_v = np.empty(n_pairs, np.int64)
        offsets = np.zeros(n_pairs + 1, np.int64)
        delta_chunks, coef_chunks = [], []
        for p, key in enumerate(sorted(per_pair)):
            pair_u[p], pair_v[p] = key
            dts = np.concatenate(per_pair[key][0])
            cfs = np.concatenate(per_pair[key][1])
            order = np.argsort(dts, kind="stable")
            delta_chunks.append(dts[order])
            coef_chunks.append(cfs[order])
            offsets[p + 1] = offsets[p] + dts.size
        deltas = np.concatenate(delta_chunks) if delta_chunks else np.empty(0)
        coefs = np.concatenate(coef_chunks) if coef_chunks else np.empty(0)
        return cls(users, pair_u, pair_v, deltas, coefs, offsets)

    @property
    def n_pairs(self) -> int:
        return int(self.pair_u.size)

    def has_coaction(self) -> bool:
        return self.n_pairs > 0

    def evaluate(self, beta: float, eps: float,
                 time_unit_s: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Per-pair weights and truncated-lag counts at one decay rate.

        ``beta`` is expressed per ``time_unit_s`` seconds; lags are stored
        in seconds, so the kernel rate is beta / time_unit_s.
        """
        if beta < 0:
            raise ContractViolationError(f"beta must be >= 0, got {beta}")
        beta_per_s = beta / time_unit_s
        dt_max = truncation_bound(beta, eps) * time_unit_s
        w, omitted = decayed_sums_kernel(self.deltas, self.coefs,
                                         self.offsets, beta_per_s, dt_max)
        return w, omitted

    def layer_at(self, beta: float, eps: float, action_type: str,
                 time_unit_s: float = 1.0) -> LayerGraph:
        w, _ = self.evaluate(beta, eps, time_unit_s)
        keep = w > 0
        return LayerGraph(
            action_type=action_type,
            beta=beta,
            users=self.users,
            edge_u=self.pair_u[keep],
            edge_v=self.pair_v[keep],
            weights=w[keep],
        )


def build_layer(index: ActionIndex, beta: float, eps: float = 1e-6,
                universe: Sequence[str] | None = None,
                time_unit_s: float = 1.0) -> LayerGraph:
    """Evaluate the decayed co-action weights of one modality at one beta."""
    table = DeltaTable.from_index(index, universe)
    return table.layer_at(beta, eps, index.action_type, time_unit_s)


@dataclass(frozen=True)
class BetaSweepResult:
    """Outcome of a modularity-maximizing decay-rate sweep."""

    grid: tuple[float, ...]
    q_curve: tuple[float, ...]
    beta_star: float
    q_star: float
    partition_at_star: Partition

    def layer_index_at_star(self) -> int:
        return self.grid.index(self.beta_star)


def beta_grid(start: float = 0.0, stop: float = 10.0,
              step: float = 0.01) -> tuple[float, ...]:
    """Ascending grid of decay rates; endpoints included."""
    if step <= 0:
        raise ContractViolationError("step must be > 0")
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


def _sweep(layer_for_beta, grid: Sequence[float], resolution: float,
           seed: int) -> BetaSweepResult:
    if len(grid) == 0:
        raise ContractViolationError("grid must be non-empty")
    grid = tuple(float(b) for b in grid)
    if any(b < 0 for b in grid) or any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
        raise ContractViolationError("grid must be strictly ascending and >= 0")
    q_curve: list[float] = []
    best: tuple[float, float, Partition] | None = None
    for beta in grid:
        layer = layer_for_beta(beta)
        if layer.n_edges == 0 or layer.total_weight() <= 0:
            q_curve.append(float("-inf"))
            continue
        partition = detect_communities(layer, gamma=resolution, seed=seed)
        q = modularity(layer, partition, gamma=resolution)
        q_curve.append(q)
        if best is None or q > best[1]:
            best = (beta, q, partition)
    if best is None:
        raise NoCoordinationEvidenceError(
            "every grid point produced a graph with zero total edge weight")
    return BetaSweepResult(
        grid=grid,
        q_curve=tuple(q_curve),
        beta_star=best[0],
        q_star=best[1],
        partition_at_star=best[2],
    )


def tune_beta(index: ActionIndex, grid: Sequence[float], eps: float = 1e-6,
              resolution: float = 1.0, seed: int = 0,
              universe: Sequence[str] | None = None,
              time_unit_s: float = 1.0) -> BetaSweepResult:
    """Select the decay rate maximizing modularity of the resulting layer.

    Every grid point builds the layer, clusters it, and records the
    modularity of the found partition; the smallest beta among maximizers
    wins. Grid points whose layer has zero total weight score -inf and are
    never selected.
    """
    table = DeltaTable.from_index(index, universe)
    if not table.has_coaction():
        raise NoCoordinationEvidenceError(
            f"no content key of type {index.action_type!r} is shared by two users")
    return _sweep(
        lambda beta: table.layer_at(beta, eps, index.action_type, time_unit_s),
        grid, resolution, seed)


def sweep_exponent_graph(edges: Sequence[tuple[str, str, float]],
                         grid: Sequence[float], resolution: float = 1.0,
                         seed: int = 0) -> BetaSweepResult:
    """Sweep a parametric graph whose edge weights are exp(-multiplier * beta).

    Accepts (node, node, multiplier) triples; useful for studying how the
    sweep trades off slow- and fast-decaying edges on a fixed topology.
    """
    users = tuple(sorted({u for u, _, _ in edges} | {v for _, v, _ in edges}))
    pos = {u: i for i, u in enumerate(users)}
    eu = np.asarray([min(pos[u], pos[v]) for u, v, _ in edges], np.int64)
    ev = np.asarray([max(pos[u], pos[v]) for u, v, _ in edges], np.int64)
    mult = np.asarray([m for _, _, m in edges], np.float64)

    def layer_for_beta(beta: float) -> LayerGraph:
        return LayerGraph(
            action_type="parametric",
            beta=beta,
            users=users,
            edge_u=eu,
            edge_v=ev,
            weights=np.exp(-mult * beta),
        )

    return _sweep(layer_for_beta, grid, resolution, seed)


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def layer_to_edge_csv(layer: LayerGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "weight"])
        for u, v, w in layer.edge_items():
            writer.writerow([u, v, repr(w)])


def layer_to_graphml(layer: LayerGraph, path) -> None:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="w" for="edge" attr.name="weight" attr.type="double"/>',
        f'  <graph id="{escape(layer.action_type)}" edgedefault="undirected">',
    ]
    for u in layer.users:
        lines.append(f'    <node id="{escape(u)}"/>')
    for u, v, w in layer.edge_items():
        lines.append(f'    <edge source="{escape(u)}" target="{escape(v)}">'
                     f'<data key="w">{w!r}</data></edge>')
    lines.append("  </graph>")
    lines.append("</graphml>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def sweep_to_csv(result: BetaSweepResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "q"])
        for beta, q in zip(result.grid, result.q_curve):
            writer.writerow([repr(beta), repr(q)])
