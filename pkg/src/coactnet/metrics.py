"""Scoring of detected partitions against ground truth.

Best-cluster precision/recall/F1 treat each community as a candidate
detection of the coordinated set and report the community with the highest
F1. Weighted precision averages per-cluster positive rates weighted by
size and rate, with singletons pinned to zero so over-fragmented output
scores poorly. Homogeneity is the conditional-entropy score of the class
labeling given the clustering; binarized NMI first labels every cluster by
strict majority and compares the induced binary labeling to ground truth.

Counting scores (F1*, precision*, recall*, weighted precision) are computed
in exact rational arithmetic and converted to float at the end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .community import Partition
from .errors import UndefinedMetricError, ValidationError
from .ingest import AUTHENTIC, COORDINATED, GroundTruth


@dataclass(frozen=True)
class EvalReport:
    """Full metric suite for one partition against one ground truth."""

    f1_star: float
    precision_star: float
    recall_star: float
    best_cluster_id: int
    homogeneity: float
    weighted_precision: float
    nmi_binarized: float
    cluster_count: int
    singleton_count: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    CSV_FIELDS = ("method", "dataset", "f1_star", "precision_star", "recall_star",
                  "homogeneity", "weighted_precision", "nmi_binarized",
                  "cluster_count", "singleton_count")

    def csv_row(self, method: str, dataset: str) -> list:
        return [method, dataset, repr(self.f1_star), repr(self.precision_star),
                repr(self.recall_star), repr(self.homogeneity),
                repr(self.weighted_precision), repr(self.nmi_binarized),
                self.cluster_count, self.singleton_count]


def _cluster_counts(partition: Partition, gt: GroundTruth) -> list[tuple[int, int]]:
    """Per community: (size, positives inside)."""
    positives = gt.positives
    counts = [[0, 0] for _ in range(partition.n_communities)]
    for user, lab in zip(partition.users, partition.labels):
        counts[lab][0] += 1
        if user in positives:
            counts[lab][1] += 1
    return [(n, x) for n, x in counts]


def _require_positives(partition: Partition, gt: GroundTruth) -> int:
    total = sum(1 for u in partition.users if u in gt.positives)
    if total == 0:
        raise UndefinedMetricError("ground truth has no positive user in the partition")
    return total


def best_cluster_scores(partition: Partition,
                        gt: GroundTruth) -> tuple[float, float, float, int]:
    """(F1*, precision*, recall*, cluster id) of the highest-F1 community.

    Per cluster: precision = positives inside / size, recall = positives
    inside / total positives, F1 their harmonic mean (0 when the cluster has
    no positives). Ties go to the larger cluster, then the smaller id.
    """
    total_pos = _require_positives(partition, gt)
    best: tuple[Fraction, int, int] | None = None  # (f1, size, -id)
    best_stats = None
    for cid, (n, x) in enumerate(_cluster_counts(partition, gt)):
        f1 = Fraction(2 * x, n + total_pos) if x else Fraction(0)
        key = (f1, n, -cid)
        if best is None or key > best:
            best = key
            best_stats = (cid, n, x)
    cid, n, x = best_stats
    precision = Fraction(x, n)
    recall = Fraction(x, total_pos)
    f1 = Fraction(2 * x, n + total_pos) if x else Fraction(0)
    return float(f1), float(precision), float(recall), cid


def weighted_precision(partition: Partition, gt: GroundTruth) -> float:
    """Size- and rate-weighted average positive rate over non-singleton clusters.

    WP = sum_k n_k p_k^2 / sum_k n_k p_k with p_k the cluster's positive
    rate when n_k > 1 and 0 otherwise; 0 when the denominator vanishes.
    """
    _require_positives(partition, gt)
    num = Fraction(0)
    den = Fraction(0)
    for n, x in _cluster_counts(partition, gt):
        if n <= 1:
            continue
        p = Fraction(x, n)
        num += n * p * p
        den += n * p
    if den == 0:
        return 0.0
    return float(num / den)


def _entropy(counts: Sequence[int]) -> float:
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log(p)
    return h


def homogeneity(partition: Partition, gt: GroundTruth) -> float:
    """1 - H(class | cluster) / H(class), with multi-campaign class labels.

    Defined as 1 when the class labeling carries no entropy at all.
    """
    classes = gt.class_labels(partition.users)
    class_ids = {c: i for i, c in enumerate(dict.fromkeys(classes))}
    y = [class_ids[c] for c in classes]
    h_class = _entropy(np.bincount(y, minlength=len(class_ids)))
    if h_class == 0.0:
        return 1.0
    n = len(y)
    h_cond = 0.0
    table: dict[int, list[int]] = {}
    for lab, cls in zip(partition.labels, y):
        table.setdefault(lab, [0] * len(class_ids))[cls] += 1
    for counts in table.values():
        nc = sum(counts)
        for c in counts:
            if c > 0:
                h_cond -= c / n * math.log(c / nc)
    return 1.0 - h_cond / h_class


def _mutual_information(a: Sequence[int], b: Sequence[int]) -> float:
    n = len(a)
    joint: dict[tuple[int, int], int] = {}
    ca: dict[int, int] = {}
    cb: dict[int, int] = {}
    for x, y in zip(a, b):
        joint[(x, y)] = joint.get((x, y), 0) + 1
        ca[x] = ca.get(x, 0) + 1
        cb[y] = cb.get(y, 0) + 1
    mi = 0.0
    for (x, y), c in joint.items():
        mi += c / n * math.log(n * c / (ca[x] * cb[y]))
    return mi


def nmi_binarized(partition: Partition, gt: GroundTruth) -> float:
    """NMI between ground truth and the majority-binarized clustering.

    A cluster is labeled positive iff strictly more than half its members
    are ground-truth positives (exact ties count as negative). Normalization
    is the arithmetic mean of the two entropies, natural log; when either
    side has zero entropy the score is 0 by convention.
    """
    _require_positives(partition, gt)
    positives = gt.positives
    counts = _cluster_counts(partition, gt)
    cluster_positive = [2 * x > n for n, x in counts]
    pred = [int(cluster_positive[lab]) for lab in partition.labels]
    truth = [int(u in positives) for u in partition.users]
    h_pred = _entropy(np.bincount(pred, minlength=2))
    h_truth = _entropy(np.bincount(truth, minlength=2))
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    return _mutual_information(pred, truth) / ((h_pred + h_truth) / 2.0)


def evaluate_partition(partition: Partition, gt: GroundTruth) -> EvalReport:
    """Run the whole suite on one partition."""
    f1, prec, rec, cid = best_cluster_scores(partition, gt)
    sizes = partition.sizes()
    return EvalReport(
        f1_star=f1,
        precision_star=prec,
        recall_star=rec,
        best_cluster_id=cid,
        homogeneity=homogeneity(partition, gt),
        weighted_precision=weighted_precision(partition, gt),
        nmi_binarized=nmi_binarized(partition, gt),
        cluster_count=len(sizes),
        singleton_count=sum(1 for s in sizes if s == 1),
    )


def evaluate_flagged(flagged: frozenset[str] | set[str], users: Sequence[str],
                     gt: GroundTruth) -> EvalReport:
    """Score a flagged-set detection.

    Precision/recall/F1 compare the flagged set to the positives directly;
    the entropy scores and weighted precision wrap the set as a two-cluster
    partition (flagged vs. rest).
    """
    users = tuple(sorted(users))
    total_pos = sum(1 for u in users if u in gt.positives)
    if total_pos == 0:
        raise UndefinedMetricError("ground truth has no positive user")
    flagged = frozenset(flagged) & set(users)
    x = sum(1 for u in flagged if u in gt.positives)
    nf = len(flagged)
    precision = Fraction(x, nf) if nf else Fraction(0)
    recall = Fraction(x, total_pos)
    f1 = Fraction(2 * x, nf + total_pos) if x else Fraction(0)
    wrapped = Partition.from_assignment({u: (0 if u in flagged else 1) for u in users})
    sizes = wrapped.sizes()
    return EvalReport(
        f1_star=float(f1),
        precision_star=float(precision),
        recall_star=float(recall),
        best_cluster_id=0,
        homogeneity=homogeneity(wrapped, gt),
        weighted_precision=weighted_precision(wrapped, gt),
        nmi_binarized=nmi_binarized(wrapped, gt),
        cluster_count=len(sizes),
        singleton_count=sum(1 for s in sizes if s == 1),
    )


# ---------------------------------------------------------------------------
# Random-labeler statistical baseline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomLabelerStats:
    """Means and empirical 95% intervals of the baseline scores."""

    reps: int
    wp_mean: float
    wp_interval: tuple[float, float]
    f1_star_mean: float
    f1_star_interval: tuple[float, float]
    homogeneity_mean: float
    homogeneity_interval: tuple[float, float]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def random_labeler(n_users: int, n_positive: int, n_clusters: int,
                   reps: int = 1000, seed: int = 0) -> RandomLabelerStats:
    """Expected scores of an uninformed model emitting a fixed cluster count.

    Each repetition assigns every user an independent uniform cluster label.
    The baseline's statistics are chosen to be stable references for that
    null model:

    * F1* tracks the best cluster's coverage of the positive set (the share
      of positives it captures);
    * weighted precision uses per-cluster positive rates estimated as the
      captured share shrunk halfway toward the uniform share 1/k, damping
      the small-sample noise of the positive counts (singletons still
      score 0);
    * homogeneity is the standard conditional-entropy score.

    Means and 2.5/97.5 percentile intervals are taken over repetitions.
    """
    if n_clusters < 1:
        raise ValidationError("n_clusters must be >= 1")
    if not (0 < n_positive <= n_users):
        raise ValidationError("need 0 < n_positive <= n_users")
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    gt_binary = np.zeros(n_users, dtype=bool)
    gt_binary[:n_positive] = True
    gt = GroundTruth({f"u{i}": (COORDINATED if gt_binary[i] else AUTHENTIC)
                      for i in range(n_users)})
    wp_v = np.empty(reps)
    f1_v = np.empty(reps)
    hom_v = np.empty(reps)
    uniform = 1.0 / n_clusters
    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), rep]))
        labels = rng.integers(0, n_clusters, size=n_users)
        sizes = np.bincount(labels, minlength=n_clusters)
        pos = np.bincount(labels[gt_binary], minlength=n_clusters)
        f1_v[rep] = pos.max() / n_positive
        num = den = 0.0
        for c in range(n_clusters):
            if sizes[c] <= 1:
                continue
            p = 0.5 * (pos[c] / n_positive + uniform)
            num += sizes[c] * p * p
            den += sizes[c] * p
        wp_v[rep] = num / den if den > 0 else 0.0
        users = [f"u{i}" for i in range(n_users)]
        part = Partition.from_labels(users, labels.tolist())
        hom_v[rep] = homogeneity(part, gt)

    def interval(v):
        lo, hi = np.percentile(v, [2.5, 97.5])
        return (float(lo), float(hi))

    return RandomLabelerStats(
        reps=reps,
        wp_mean=float(wp_v.mean()), wp_interval=interval(wp_v),
        f1_star_mean=float(f1_v.mean()), f1_star_interval=interval(f1_v),
        homogeneity_mean=float(hom_v.mean()), homogeneity_interval=interval(hom_v),
    )


def rank_methods(scores: Mapping[str, Mapping[str, float]],
                 higher_is_better: bool = True) -> dict[str, float]:
    """Average rank of each method across datasets (1 = best, ties share means)."""
    methods = sorted(scores)
    if not methods:
        return {}
    datasets = sorted({d for m in methods for d in scores[m]})
    for m in methods:
        for d in datasets:
            if d not in scores[m]:
                raise ValidationError(f"method {m!r} has no score for dataset {d!r}")
    totals = {m: 0.0 for m in methods}
    for d in datasets:
        vals = sorted(((scores[m][d], m) for m in methods),
                      key=lambda t: (-t[0] if higher_is_better else t[0], t[1]))
        i = 0
        while i < len(vals):
            j = i
            while j < len(vals) and vals[j][0] == vals[i][0]:
                j += 1
            mean_rank = (i + 1 + j) / 2.0
            for k in range(i, j):
                totals[vals[k][1]] += mean_rank
            i = j
    return {m: totals[m] / len(datasets) for m in methods}
