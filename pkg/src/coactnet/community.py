"""Weighted modularity and community detection, monoplex and multiplex.

The optimizer is a Louvain-style hierarchy (greedy local moves followed by
graph aggregation) with an optional Leiden-style refinement phase that
re-partitions each community from singletons before aggregating, so that
aggregated communities stay internally connected. A final leaf-level sweep
guarantees the returned partition is stable under single-node relocations.

For a multiplex network the objective is the intra-layer part of multislice
modularity with one null model per layer:

    Q = (1/2M) * sum_s sum_ij [A^s_ij - gamma * k^s_i k^s_j / (2 m_s)] d(c_i, c_j)

with M the total edge weight across layers. Inter-layer coupling links each
node to its own copies in all other layers; under the node-aligned
partitions produced here that coupling term is the same for every
partition, so it is reported separately and never enters the optimization.
All partitions are node-aligned: one community id per user across layers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._accel import local_move_kernel
from .errors import ContractViolationError, DegenerateGraphWarning

_MAX_SWEEPS = 256


@dataclass(frozen=True)
class Partition:
    """Total assignment of every user to exactly one community.

    Community ids are dense integers from 0, numbered by first appearance
    in user order.
    """

    users: tuple[str, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        if len(self.users) != len(self.labels):
            raise ContractViolationError("users and labels must have equal length")
        if self.labels:
            seen: set[int] = set()
            nxt = 0
            for lab in self.labels:
                if lab not in seen:
                    if lab != nxt:
                        raise ContractViolationError(
                            "labels must be dense integers numbered by first appearance")
                    seen.add(lab)
                    nxt += 1

    @classmethod
    def from_assignment(cls, assignment: Mapping[str, object]) -> "Partition":
        """Build from user -> community-id (any hashable ids), canonicalized."""
        users = tuple(sorted(assignment))
        remap: dict[object, int] = {}
        labels = []
        for u in users:
            c = assignment[u]
            if c not in remap:
                remap[c] = len(remap)
            labels.append(remap[c])
        return cls(users, tuple(labels))

    @classmethod
    def from_labels(cls, users: Sequence[str], labels: Sequence[int]) -> "Partition":
        return cls.from_assignment(dict(zip(users, labels)))

    @property
    def assignment(self) -> dict[str, int]:
        return dict(zip(self.users, self.labels))

    @property
    def n_communities(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    def communities(self) -> list[frozenset[str]]:
        out: list[set[str]] = [set() for _ in range(self.n_communities)]
        for u, lab in zip(self.users, self.labels):
            out[lab].add(u)
        return [frozenset(c) for c in out]

    def sizes(self) -> list[int]:
        counts = [0] * self.n_communities
        for lab in self.labels:
            counts[lab] += 1
        return counts

    def label_array(self, users: Sequence[str]) -> np.ndarray:
        a = self.assignment
        try:
            return np.asarray([a[u] for u in users], dtype=np.int64)
        except KeyError as exc:
            raise ContractViolationError(
                f"partition does not cover user {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class MultiplexNetwork:
    """Aligned layers over a shared user universe with coupling parameters."""

    layers: tuple
    omega: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.omega < 0 or self.gamma < 0:
            raise ContractViolationError("omega and gamma must be >= 0")
        if self.layers:
            universe = self.layers[0].users
            for layer in self.layers[1:]:
                if layer.users != universe:
                    raise ContractViolationError(
                        "all layers must share the same user universe")
            names = [layer.action_type for layer in self.layers]
            if len(set(names)) != len(names):
                raise ContractViolationError("layer action types must be distinct")

    @property
    def users(self) -> tuple[str, ...]:
        if not self.layers:
            return ()
        return self.layers[0].users


# ---------------------------------------------------------------------------
# Array plumbing
# ---------------------------------------------------------------------------

def _layer_arrays(layers) -> tuple[int, np.ndarray, np.ndarray, np.ndarray,
                                   np.ndarray, float]:
    """Combined undirected edge list, per-layer scaled strengths, total weight.

    Returns (n, edge_u, edge_v, edge_w, kappa, M) where kappa[i, s] is node
    i's strength in layer s divided by sqrt(2 m_s) and edges are the
    layer-sum adjacency with u < v, deduplicated.
    """
    n = len(layers[0].users)
    n_layers = len(layers)
    kappa = np.zeros((n, n_layers), np.float64)
    total = 0.0
    eu_all, ev_all, w_all = [], [], []
    for s, layer in enumerate(layers):
        m_s = float(np.sum(layer.weights))
        if m_s > 0:
            strength = np.zeros(n, np.float64)
            np.add.at(strength, layer.edge_u, layer.weights)
            np.add.at(strength, layer.edge_v, layer.weights)
            kappa[:, s] = strength / np.sqrt(2.0 * m_s)
            total += m_s
        eu_all.append(layer.edge_u)
        ev_all.append(layer.edge_v)
        w_all.append(layer.weights)
    eu = np.concatenate(eu_all) if eu_all else np.empty(0, np.int64)
    ev = np.concatenate(ev_all) if ev_all else np.empty(0, np.int64)
    w = np.concatenate(w_all) if w_all else np.empty(0, np.float64)
    lo = np.minimum(eu, ev).astype(np.int64)
    hi = np.maximum(eu, ev).astype(np.int64)
    if lo.size:
        key = lo * n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        w_sum = np.zeros(uniq.size, np.float64)
        np.add.at(w_sum, inv, w)
        lo, hi, w = uniq // n, uniq % n, w_sum
    return n, lo, hi, w, kappa, total


def _csr(n: int, eu: np.ndarray, ev: np.ndarray, w: np.ndarray):
    src = np.concatenate([eu, ev])
    dst = np.concatenate([ev, eu])
    ww = np.concatenate([w, w])
    order = np.lexsort((dst, src))
    src, dst, ww = src[order], dst[order], ww[order]
    indptr = np.zeros(n + 1, np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst.astype(np.int64), ww.astype(np.float64)


def _quality(eu, ev, w, kappa, labels, gamma: float) -> float:
    """H = sum_c [ W_c - (gamma/2) * ||sum_{i in c} kappa_i||^2 ]."""
    intra = float(np.sum(w[labels[eu] == labels[ev]])) if w.size else 0.0
    n_comms = int(labels.max()) + 1 if labels.size else 0
    comm_kappa = np.zeros((n_comms, kappa.shape[1]), np.float64)
    np.add.at(comm_kappa, labels, kappa)
    return intra - 0.5 * gamma * float(np.sum(comm_kappa * comm_kappa))


def _dense(labels: np.ndarray) -> tuple[np.ndarray, int]:
    uniq, inv = np.unique(labels, return_inverse=True)
    return inv.astype(np.int64), uniq.size


def _first_occurrence_order(labels: np.ndarray) -> np.ndarray:
    remap: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels.tolist()):
        if lab not in remap:
            remap[lab] = len(remap)
        out[i] = remap[lab]
    return out


def _run_local_move(n, indptr, indices, weights, kappa, labels, order,
                    constraint, gamma) -> int:
    n_comms = n
    comm_kappa = np.zeros((n_comms, kappa.shape[1]), np.float64)
    np.add.at(comm_kappa, labels, kappa)
    comm_size = np.bincount(labels, minlength=n_comms).astype(np.int64)
    return int(local_move_kernel(
        indptr, indices, weights, kappa, labels, comm_kappa, comm_size,
        order, constraint, float(gamma), _MAX_SWEEPS))


def _cluster_engine(layers, gamma: float, seed: int, refine: bool) -> np.ndarray:
    n, eu, ev, w, kappa, _m = _layer_arrays(layers)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x636f6163]))
    leaf = (eu, ev, w, kappa)

    level_edges = (eu, ev, w)
    level_kappa = kappa
    level_n = n
    labels = np.arange(n, dtype=np.int64)
    mappings: list[np.ndarray] = []

    while True:
        indptr, indices, weights = _csr(level_n, *level_edges)
        order = rng.permutation(level_n).astype(np.int64)
        _run_local_move(level_n, indptr, indices, weights, level_kappa, labels,
                        order, np.zeros(level_n, np.int64), gamma)
        dense, n_comms = _dense(labels)
        if n_comms == level_n:
            labels = dense
            break
        if refine:
            ref = np.arange(level_n, dtype=np.int64)
            order2 = rng.permutation(level_n).astype(np.int64)
            _run_local_move(level_n, indptr, indices, weights, level_kappa, ref,
                            order2, dense, gamma)
            ref_dense, n_ref = _dense(ref)
            if n_ref == level_n:
                ref_dense, n_ref = dense, n_comms
        else:
            ref_dense, n_ref = dense, n_comms
        # aggregate over the refined communities
        agg_kappa = np.zeros((n_ref, level_kappa.shape[1]), np.float64)
        np.add.at(agg_kappa, ref_dense, level_kappa)
        seu, sev, sw = level_edges
        alo = ref_dense[np.minimum(seu, sev)]
        ahi = ref_dense[np.maximum(seu, sev)]
        lo = np.minimum(alo, ahi)
        hi = np.maximum(alo, ahi)
        keep = lo != hi
        lo, hi, sw2 = lo[keep], hi[keep], sw[keep]
        if lo.size:
            key = lo.astype(np.int64) * n_ref + hi
            uniq, inv = np.unique(key, return_inverse=True)
            w_sum = np.zeros(uniq.size, np.float64)
            np.add.at(w_sum, inv, sw2)
            lo, hi, sw2 = (uniq // n_ref).astype(np.int64), (uniq % n_ref).astype(np.int64), w_sum
        # warm-start labels of supernodes: the communities found at this level
        super_init = np.empty(n_ref, np.int64)
        super_init[ref_dense] = dense  # each ref community lies in one community
        mappings.append(ref_dense)
        level_edges = (lo, hi, sw2)
        level_kappa = agg_kappa
        level_n = n_ref
        labels, _ = _dense(super_init)

    # unfold to leaf labels
    for mapping in reversed(mappings):
        labels = labels[mapping]
    # final leaf-level sweeps: certify single-node move stability
    eu, ev, w, kappa = leaf
    indptr, indices, weights = _csr(n, eu, ev, w)
    labels = labels.copy()
    order = rng.permutation(n).astype(np.int64)
    _run_local_move(n, indptr, indices, weights, kappa, labels, order,
                    np.zeros(n, np.int64), gamma)
    labels, _ = _dense(labels)
    return _first_occurrence_order(labels)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def modularity(graph, partition: Partition, gamma: float = 1.0) -> float:
    """Weighted Newman-Girvan modularity with resolution gamma.

    Returns 0.0 (with a DegenerateGraphWarning) for a graph with zero total
    edge weight, where the score is undefined.
    """
    labels = partition.label_array(graph.users)
    m = float(np.sum(graph.weights))
    if m <= 0 or len(graph.users) == 0:
        warnings.warn("modularity of a graph with no edge weight is 0 by convention",
                      DegenerateGraphWarning, stacklevel=2)
        return 0.0
    n, eu, ev, w, kappa, total = _layer_arrays([graph])
    return _quality(eu, ev, w, kappa, labels, gamma) / total


def detect_communities(graph, gamma: float = 1.0, seed: int = 0,
                       method: str = "leiden") -> Partition:
    """Partition one layer by greedy modularity optimization.

    Deterministic for a fixed seed; the result is a local optimum under
    single-node relocations. Isolated nodes come back as singletons.
    """
    if method not in ("leiden", "louvain"):
        raise ContractViolationError(f"unknown method {method!r}")
    labels = _cluster_engine([graph], gamma, seed, refine=(method == "leiden"))
    return Partition(tuple(graph.users), tuple(int(x) for x in labels))


def louvain_communities(graph, gamma: float = 1.0, seed: int = 0) -> Partition:
    """Plain Louvain (no refinement phase); used by the reference detectors."""
    return detect_communities(graph, gamma=gamma, seed=seed, method="louvain")


def multislice_modularity(mx: MultiplexNetwork, partition: Partition,
                          gamma: float | None = None,
                          omega: float | None = None) -> float:
    """Intra-layer part of multislice modularity under a node-aligned partition.

    Each layer keeps its own null model; the value is normalized by the
    total intra-layer edge weight, so a single-layer network reproduces
    monoplex modularity exactly. The inter-layer coupling term is constant
    for node-aligned partitions and is available via coupling_offset.
    """
    if gamma is None:
        gamma = mx.gamma
    if not mx.layers or len(mx.users) == 0:
        warnings.warn("multislice modularity of an empty network is 0 by convention",
                      DegenerateGraphWarning, stacklevel=2)
        return 0.0
    labels = partition.label_array(mx.users)
    n, eu, ev, w, kappa, total = _layer_arrays(mx.layers)
    if total <= 0:
        warnings.warn("multislice modularity with zero edge weight is 0 by convention",
                      DegenerateGraphWarning, stacklevel=2)
        return 0.0
    return _quality(eu, ev, w, kappa, labels, gamma) / total


def coupling_offset(mx: MultiplexNetwork, omega: float | None = None) -> float:
    """Constant coupling contribution for node-aligned partitions.

    With categorical coupling every node links its copies across all layer
    pairs, contributing N * L * (L - 1) * omega regardless of the partition;
    the value is reported on the same 1/(2M) scale as multislice_modularity.
    """
    if omega is None:
        omega = mx.omega
    n_layers = len(mx.layers)
    n = len(mx.users)
    if n_layers < 2 or n == 0:
        return 0.0
    total = sum(float(np.sum(layer.weights)) for layer in mx.layers)
    if total <= 0:
        return 0.0
    return n * n_layers * (n_layers - 1) * omega / (2.0 * total)


def cluster_multiplex(mx: MultiplexNetwork, seed: int = 0,
                      method: str = "leiden") -> Partition:
    """Node-aligned partition optimizing the multislice objective.

    A single-layer network yields the same partition as detect_communities
    on that layer with the same seed.
    """
    if not mx.layers:
        raise ContractViolationError("multiplex network needs at least one layer")
    if method not in ("leiden", "louvain"):
        raise ContractViolationError(f"unknown method {method!r}")
    labels = _cluster_engine(list(mx.layers), mx.gamma, seed,
                             refine=(method == "leiden"))
    return Partition(tuple(mx.users), tuple(int(x) for x in labels))
