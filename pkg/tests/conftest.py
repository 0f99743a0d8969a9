"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately re-derive every quantity from its defining
formula (quadratic scans, explicit contingency tables, direct double sums)
so they share no code with the implementation paths they check.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from coactnet.community import Partition, modularity
from coactnet.layers import LayerGraph


# ---------------------------------------------------------------------------
# Graph helpers
# ---------------------------------------------------------------------------

def make_graph(edges, users=None, action_type="test", beta=0.0) -> LayerGraph:
    """LayerGraph from (u, v, w) triples; node names are strings."""
    names = sorted({str(u) for e in edges for u in e[:2]} | set(users or ()))
    pos = {u: i for i, u in enumerate(names)}
    eu = np.asarray([min(pos[str(a)], pos[str(b)]) for a, b, _ in edges], np.int64)
    ev = np.asarray([max(pos[str(a)], pos[str(b)]) for a, b, _ in edges], np.int64)
    w = np.asarray([float(x) for _, _, x in edges], np.float64)
    return LayerGraph(action_type=action_type, beta=beta, users=tuple(names),
                      edge_u=eu, edge_v=ev, weights=w)


def two_triangles() -> LayerGraph:
    return make_graph([("a", "b", 1), ("b", "c", 1), ("a", "c", 1),
                       ("d", "e", 1), ("e", "f", 1), ("d", "f", 1)])


def weak_bridge_cliques() -> LayerGraph:
    edges = []
    for block in (("a", "b", "c", "d"), ("e", "f", "g", "h")):
        for u, v in combinations(block, 2):
            edges.append((u, v, 1.0))
    edges.append(("d", "e", 0.01))
    return make_graph(edges)


# ---------------------------------------------------------------------------
# Brute-force modularity oracle
# ---------------------------------------------------------------------------

def set_partitions(elems):
    """All set partitions of a list (Bell-number many)."""
    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def modularity_direct(graph: LayerGraph, assignment: dict, gamma: float = 1.0) -> float:
    """Q from the defining double sum over the dense adjacency matrix."""
    n = len(graph.users)
    A = np.zeros((n, n))
    for a, b, w in zip(graph.edge_u, graph.edge_v, graph.weights):
        A[a, b] += w
        A[b, a] += w
    m2 = A.sum()
    if m2 == 0:
        return 0.0
    k = A.sum(axis=1)
    labels = [assignment[u] for u in graph.users]
    q = 0.0
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += A[i, j] - gamma * k[i] * k[j] / m2
    return q / m2


def brute_force_best_partition(graph: LayerGraph, gamma: float = 1.0):
    """Globally modularity-optimal partition by exhaustive enumeration."""
    best_q, best = -math.inf, None
    for part in set_partitions(list(graph.users)):
        assignment = {u: i for i, block in enumerate(part) for u in block}
        q = modularity_direct(graph, assignment, gamma)
        if q > best_q + 1e-12:
            best_q, best = q, part
    return best_q, best


# ---------------------------------------------------------------------------
# Quadratic co-action weight oracle
# ---------------------------------------------------------------------------

def brute_force_weights(data, beta_per_s: float, dt_max_s: float = math.inf):
    """Edge weights from the defining formula, all pairs, all shared keys,
    full scan over timestamp pairs.

    ``data``: {content: {user: iterable of timestamps (seconds)}}.
    Returns ({(u, v): weight}, {(u, v): omitted-delta count}) with u < v.
    """
    weights: dict[tuple[str, str], float] = {}
    omitted: dict[tuple[str, str], int] = {}
    for users in data.values():
        n_k = len(users)
        if n_k < 2:
            continue
        for u, v in combinations(sorted(users), 2):
            total = 0.0
            skipped = 0
            for src, dst in ((u, v), (v, u)):
                for t in users[src]:
                    later = [t2 for t2 in users[dst] if t2 >= t]
                    if not later:
                        continue
                    dt = min(later) - t
                    if dt > dt_max_s:
                        skipped += 1
                        continue
                    total += math.exp(-beta_per_s * dt) / (n_k - 1)
            key = (u, v)
            weights[key] = weights.get(key, 0.0) + total
            omitted[key] = omitted.get(key, 0) + skipped
    return weights, omitted


def layer_weight_dict(layer: LayerGraph) -> dict[tuple[str, str], float]:
    return {(layer.users[a], layer.users[b]): float(w)
            for a, b, w in zip(layer.edge_u, layer.edge_v, layer.weights)}


def random_index_data(rng: np.random.Generator, max_users: int = 20,
                      max_events: int = 100, span_s: float = 1000.0):
    """Random {content: {user: sorted unique timestamps}} instance."""
    n_users = int(rng.integers(2, max_users + 1))
    n_contents = int(rng.integers(1, 6))
    n_events = int(rng.integers(n_contents, max_events + 1))
    users = [f"u{i}" for i in range(n_users)]
    data: dict[str, dict[str, list[float]]] = {}
    for _ in range(n_events):
        k = f"k{rng.integers(0, n_contents)}"
        u = users[int(rng.integers(0, n_users))]
        t = float(np.round(rng.uniform(0, span_s), 3))
        data.setdefault(k, {}).setdefault(u, []).append(t)
    return {
        k: {u: sorted(set(ts)) for u, ts in per_user.items()}
        for k, per_user in data.items()
    }


# ---------------------------------------------------------------------------
# Metric oracles (explicit contingency tables)
# ---------------------------------------------------------------------------

def contingency(partition: Partition, positives: set[str]):
    """Per cluster: (members, positive members)."""
    table = {}
    for user, lab in zip(partition.users, partition.labels):
        n, x = table.get(lab, (0, 0))
        table[lab] = (n + 1, x + (user in positives))
    return table


def oracle_best_cluster(partition: Partition, positives: set[str]):
    total = sum(1 for u in partition.users if u in positives)
    best = None
    for cid, (n, x) in sorted(contingency(partition, positives).items()):
        p = Fraction(x, n)
        r = Fraction(x, total)
        f1 = Fraction(0) if p == 0 and r == 0 else 2 * p * r / (p + r)
        key = (f1, n, -cid)
        if best is None or key > best[0]:
            best = (key, float(f1), float(p), float(r), cid)
    return best[1], best[2], best[3], best[4]


def oracle_weighted_precision(partition: Partition, positives: set[str]) -> float:
    num = Fraction(0)
    den = Fraction(0)
    for n, x in contingency(partition, positives).values():
        p = Fraction(x, n) if n > 1 else Fraction(0)
        num += n * p * p
        den += n * p
    return float(num / den) if den else 0.0


def _entropy_of(counts) -> float:
    total = sum(counts)
    return -sum(c / total * math.log(c / total) for c in counts if c)


def oracle_homogeneity(partition: Partition, class_of: dict[str, str]) -> float:
    classes = sorted(set(class_of.values()))
    h_class = _entropy_of([sum(1 for u in partition.users if class_of[u] == c)
                           for c in classes])
    if h_class == 0:
        return 1.0
    n = len(partition.users)
    h_cond = 0.0
    for block in partition.communities():
        for c in classes:
            cnt = sum(1 for u in block if class_of[u] == c)
            if cnt:
                h_cond -= cnt / n * math.log(cnt / len(block))
    return 1.0 - h_cond / h_class


def oracle_nmi_binarized(partition: Partition, positives: set[str]) -> float:
    pred = {}
    for block in partition.communities():
        flag = int(2 * sum(1 for u in block if u in positives) > len(block))
        for u in block:
            pred[u] = flag
    users = partition.users
    a = [pred[u] for u in users]
    b = [int(u in positives) for u in users]
    n = len(users)
    h_a = _entropy_of([a.count(0), a.count(1)])
    h_b = _entropy_of([b.count(0), b.count(1)])
    if h_a == 0 or h_b == 0:
        return 0.0
    mi = 0.0
    for x in (0, 1):
        for y in (0, 1):
            joint = sum(1 for i in range(n) if a[i] == x and b[i] == y)
            if joint:
                mi += joint / n * math.log(n * joint / (a.count(x) * b.count(y)))
    return mi / ((h_a + h_b) / 2)


# ---------------------------------------------------------------------------
# Gestalt string-matching oracle
# ---------------------------------------------------------------------------

def oracle_ro_similarity(a: str, b: str) -> float:
    """Recursive longest-common-substring matching, symmetrized as the max
    over both argument orders; ties inside one order go to the block
    starting earliest in the first string, then in the second."""

    def matched(x: str, y: str) -> int:
        best_len, best_i, best_j = 0, 0, 0
        for i in range(len(x)):
            for j in range(len(y)):
                k = 0
                while i + k < len(x) and j + k < len(y) and x[i + k] == y[j + k]:
                    k += 1
                if k > best_len:
                    best_len, best_i, best_j = k, i, j
        if best_len == 0:
            return 0
        return (best_len
                + matched(x[:best_i], y[:best_j])
                + matched(x[best_i + best_len:], y[best_j + best_len:]))

    if not a and not b:
        return 1.0
    total = len(a) + len(b)
    return max(2.0 * matched(a, b) / total, 2.0 * matched(b, a) / total)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
