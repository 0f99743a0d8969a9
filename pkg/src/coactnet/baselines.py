"""Reference coordination detectors for benchmarking.

Six detectors consume a Dataset and emit a DetectionResult: either a
flagged user set or a full partition. They cover daily identical hashtag
sequences, rapid reposting, co-repost cardinality with a disparity-filter
backbone, near-duplicate text, synchronized actions over sliding windows,
and behavioral-symbol similarity.

Detectors that need richer fields (repost provenance, post text) ignore
events that lack them only when the relevant action type is absent
altogether; a present repost type with missing provenance is an error.
This lets every detector run end-to-end on datasets that simply do not
contain its modality, returning an empty detection.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from typing import Iterable, Mapping, Sequence

import numpy as np

from .community import Partition, louvain_communities
from .errors import MissingFieldError, ValidationError
from .ingest import ActionEvent, Dataset
from .layers import LayerGraph

DAY_S = 86400.0

RETWEET_TYPE = "retweet"
HASHTAG_TYPE = "hashtag"


@dataclass(frozen=True)
class DetectionResult:
    """Output contract shared by all detectors."""

    method_name: str
    kind: str  # "flagged_set" | "partition"
    parameters: Mapping[str, object] = field(default_factory=dict)
    flagged: frozenset[str] | None = None
    partition: Partition | None = None

    def __post_init__(self):
        if self.kind == "flagged_set":
            if self.flagged is None or self.partition is not None:
                raise ValidationError("flagged_set result must carry exactly a user set")
        elif self.kind == "partition":
            if self.partition is None or self.flagged is not None:
                raise ValidationError("partition result must carry exactly a partition")
        else:
            raise ValidationError(f"unknown detection kind {self.kind!r}")

    def to_json(self) -> str:
        payload: dict[str, object] = {
            "method": self.method_name,
            "kind": self.kind,
            "parameters": dict(self.parameters),
        }
        if self.flagged is not None:
            payload["flagged"] = sorted(self.flagged)
        if self.partition is not None:
            payload["partition"] = {u: int(c) for u, c in self.partition.assignment.items()}
        return json.dumps(payload, sort_keys=True)


# ---------------------------------------------------------------------------
# Post grouping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Post:
    """Events sharing one post id (or a single event without one)."""

    user: str
    timestamp: float
    post_id: str
    events: tuple[ActionEvent, ...]

    @property
    def is_original(self) -> bool:
        return not any(e.source_user for e in self.events)

    @property
    def text(self) -> str | None:
        for e in self.events:
            if e.text:
                return e.text
        return None

    def hashtags(self) -> list[str]:
        return [e.content for e in self.events if e.action_type == HASHTAG_TYPE]


def group_posts(dataset: Dataset) -> list[Post]:
    """Group events into posts, ordered by time; events without a post id
    each form their own single-event post."""
    keyed: dict[str, list[ActionEvent]] = {}
    singles: list[Post] = []
    for i, ev in enumerate(dataset.events):
        if ev.post_id:
            keyed.setdefault(f"{ev.user}\x00{ev.post_id}", []).append(ev)
        else:
            singles.append(Post(ev.user, ev.timestamp, f"@{i}", (ev,)))
    posts = singles
    for key, events in keyed.items():
        user = events[0].user
        ts = min(e.timestamp for e in events)
        posts.append(Post(user, ts, events[0].post_id, tuple(events)))
    posts.sort(key=lambda p: (p.timestamp, p.user, p.post_id))
    return posts


# ---------------------------------------------------------------------------
# Identical daily hashtag sequences
# ---------------------------------------------------------------------------

def hashtag_sequences(dataset: Dataset, min_distinct: int = 5) -> DetectionResult:
    """Flag users sharing an identical ordered daily hashtag sequence.

    Per day, only users with at least ``min_distinct`` different hashtags in
    their original posts qualify; qualifying users with byte-identical
    hashtag sequences form a connected component and are all flagged.
    """
    daily: dict[int, dict[str, list[str]]] = {}
    for post in group_posts(dataset):
        if not post.is_original:
            continue
        tags = post.hashtags()
        if not tags:
            continue
        day = int(post.timestamp // DAY_S)
        daily.setdefault(day, {}).setdefault(post.user, []).extend(tags)
    flagged: set[str] = set()
    for day, per_user in daily.items():
        groups: dict[tuple[str, ...], list[str]] = {}
        for user, seq in per_user.items():
            if len(set(seq)) >= min_distinct:
                groups.setdefault(tuple(seq), []).append(user)
        for users in groups.values():
            if len(users) >= 2:
                flagged.update(users)
    return DetectionResult(
        method_name="hashtag_sequences", kind="flagged_set",
        parameters={"min_distinct": min_distinct},
        flagged=frozenset(flagged))


# ---------------------------------------------------------------------------
# Rapid reposts
# ---------------------------------------------------------------------------

def rapid_retweets(dataset: Dataset, interval_s: float = 60.0,
                   retweet_type: str = RETWEET_TYPE) -> DetectionResult:
    """Flag endpoints of repeated fast reposts.

    A directed edge (reposter -> source author) counts reposts published
    within ``interval_s`` of the original post; self-loops are dropped and
    only edges of weight >= 2 survive. A dataset without the repost action
    type yields an empty detection.
    """
    edges: dict[tuple[str, str], int] = {}
    for ev in dataset.events:
        if ev.action_type != retweet_type:
            continue
        if ev.source_user is None:
            raise MissingFieldError("source_user")
        if ev.source_timestamp is None:
            raise MissingFieldError("source_timestamp")
        if ev.source_user == ev.user:
            continue
        if ev.timestamp - ev.source_timestamp <= interval_s:
            key = (ev.user, ev.source_user)
            edges[key] = edges.get(key, 0) + 1
    flagged: set[str] = set()
    for (u, v), w in edges.items():
        if w >= 2:
            flagged.update((u, v))
    return DetectionResult(
        method_name="rapid_retweets", kind="flagged_set",
        parameters={"interval_s": interval_s},
        flagged=frozenset(flagged))


# ---------------------------------------------------------------------------
# Co-repost cardinality with disparity backbone
# ---------------------------------------------------------------------------

def disparity_pvalue(weight: float, strength: float, degree: int) -> float:
    """Null probability that an edge this heavy arises from a uniformly
    split node strength: (1 - w/s)^(k-1); 1 for degree-1 nodes."""
    if degree <= 1:
        return 1.0
    return (1.0 - weight / strength) ** (degree - 1)


def disparity_filter(edges: Mapping[tuple[str, str], float],
                     alpha: float) -> dict[tuple[str, str], float]:
    """Keep edges significant (p <= alpha) from either endpoint's view."""
    strength: dict[str, float] = {}
    degree: dict[str, int] = {}
    for (u, v), w in edges.items():
        strength[u] = strength.get(u, 0.0) + w
        strength[v] = strength.get(v, 0.0) + w
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    kept = {}
    for (u, v), w in edges.items():
        p_u = disparity_pvalue(w, strength[u], degree[u])
        p_v = disparity_pvalue(w, strength[v], degree[v])
        if p_u <= alpha or p_v <= alpha:
            kept[(u, v)] = w
    return kept


def _neighborhood_overlap(edges: Iterable[tuple[str, str]]) -> dict[tuple[str, str], float]:
    nbrs: dict[str, set[str]] = {}
    for u, v in edges:
        nbrs.setdefault(u, set()).add(v)
        nbrs.setdefault(v, set()).add(u)
    overlap = {}
    for u, v in edges:
        common = (nbrs[u] & nbrs[v]) - {u, v}
        union = (nbrs[u] | nbrs[v]) - {u, v}
        overlap[(u, v)] = len(common) / len(union) if union else 0.0
    return overlap


def coretweet_cardinality(dataset: Dataset, alpha: float = 0.05,
                          overlap_k: float = 0.05,
                          window_s: float = 7 * DAY_S,
                          retweet_type: str = RETWEET_TYPE) -> DetectionResult:
    """Flag users kept by the filtered co-repost graph.

    Per tumbling window: connect users reposting the same post, weighted by
    the number of distinct shared posts; apply the disparity backbone at
    ``alpha``, drop edges with neighborhood overlap below ``overlap_k``,
    discard isolates, and flag everything still connected.
    """
    reposts = [ev for ev in dataset.events if ev.action_type == retweet_type]
    flagged: set[str] = set()
    if reposts:
        t0 = min(ev.timestamp for ev in reposts)
        windows: dict[int, dict[str, set[str]]] = {}
        for ev in reposts:
            w = int((ev.timestamp - t0) // window_s)
            windows.setdefault(w, {}).setdefault(ev.content, set()).add(ev.user)
        for per_post in windows.values():
            pair_w: dict[tuple[str, str], float] = {}
            for users in per_post.values():
                ordered = sorted(users)
                for i in range(len(ordered)):
                    for j in range(i + 1, len(ordered)):
                        key = (ordered[i], ordered[j])
                        pair_w[key] = pair_w.get(key, 0.0) + 1.0
            kept = disparity_filter(pair_w, alpha)
            overlap = _neighborhood_overlap(kept)
            final = [e for e in kept if overlap[e] >= overlap_k]
            for u, v in final:
                flagged.update((u, v))
    return DetectionResult(
        method_name="coretweet_cardinality", kind="flagged_set",
        parameters={"alpha": alpha, "overlap_k": overlap_k, "window_s": window_s},
        flagged=frozenset(flagged))


# ---------------------------------------------------------------------------
# Near-duplicate text
# ---------------------------------------------------------------------------

def text_similarity(a: str, b: str) -> float:
    """Gestalt pattern-matching similarity in [0, 1]: twice the total length
    of recursively matched longest common blocks over the combined length.

    The recursive matching breaks ties by the block starting earliest in
    its first argument, which is order-dependent on rare inputs; the score
    is symmetrized as the maximum over both argument orders, and equals 1
    exactly for identical strings.
    """
    return max(SequenceMatcher(None, a, b, autojunk=False).ratio(),
               SequenceMatcher(None, b, a, autojunk=False).ratio())


def ratcliff_obershelp(dataset: Dataset, threshold: float = 0.7,
                       max_distance: int = 10) -> DetectionResult:
    """Flag authors of near-duplicate original posts close in the timeline.

    Original posts are ordered by publication time; posts at most
    ``max_distance`` positions apart whose text similarity reaches the
    threshold link their authors.
    """
    posts = [p for p in group_posts(dataset) if p.is_original and p.text]
    flagged: set[str] = set()
    for i in range(len(posts)):
        for j in range(i + 1, min(i + max_distance + 1, len(posts))):
            if text_similarity(posts[i].text, posts[j].text) >= threshold:
                flagged.update((posts[i].user, posts[j].user))
    return DetectionResult(
        method_name="ratcliff_obershelp", kind="flagged_set",
        parameters={"threshold": threshold, "max_distance": max_distance},
        flagged=frozenset(flagged))


# ---------------------------------------------------------------------------
# Synchronized actions over sliding windows
# ---------------------------------------------------------------------------

def synchronized_actions(dataset: Dataset, action_type: str,
                         filtering: bool = False, window_s: float = 300.0,
                         seed: int = 0) -> DetectionResult:
    """Partition users by co-activity bursts on one action type.

    A window anchors at each successive original post and spans
    ``window_s`` forward; per window and content, an unordered user pair
    gains the minimum of the two activity counts. Overlapping windows
    recount by design. With ``filtering``, only edges with weight >=
    ceil(mean + population std) survive. Communities come from plain
    Louvain; users without edges stay singletons.
    """
    events = [ev for ev in dataset.events
              if ev.action_type == action_type and not ev.source_user]
    events.sort(key=lambda e: e.timestamp)
    times = [e.timestamp for e in events]
    weights: dict[tuple[str, str], float] = {}
    for anchor in range(len(events)):
        lo = anchor
        hi = bisect_left(times, times[anchor] + window_s, lo=anchor)
        counts: dict[str, dict[str, int]] = {}
        for ev in events[lo:hi]:
            per_user = counts.setdefault(ev.content, {})
            per_user[ev.user] = per_user.get(ev.user, 0) + 1
        for per_user in counts.values():
            users = sorted(per_user)
            for i in range(len(users)):
                for j in range(i + 1, len(users)):
                    key = (users[i], users[j])
                    add = min(per_user[users[i]], per_user[users[j]])
                    weights[key] = weights.get(key, 0.0) + add
    if filtering and weights:
        vals = np.asarray(list(weights.values()))
        cut = math.ceil(float(vals.mean() + vals.std()))
        weights = {k: w for k, w in weights.items() if w >= cut}
    partition = _partition_from_edges(dataset, weights, seed,
                                      action_type=f"sync:{action_type}")
    return DetectionResult(
        method_name="synchronized_actions", kind="partition",
        parameters={"action_type": action_type, "filtering": filtering,
                    "window_s": window_s, "seed": seed},
        partition=partition)


def _partition_from_edges(dataset: Dataset, weights: Mapping[tuple[str, str], float],
                          seed: int, action_type: str) -> Partition:
    users = tuple(sorted(dataset.users))
    pos = {u: i for i, u in enumerate(users)}
    items = sorted(weights.items())
    eu = np.asarray([pos[u] for (u, _v), _w in items], np.int64)
    ev = np.asarray([pos[v] for (_u, v), _w in items], np.int64)
    w = np.asarray([float(x) for _, x in items], np.float64)
    graph = LayerGraph(action_type=action_type, beta=0.0, users=users,
                       edge_u=eu, edge_v=ev, weights=w)
    if w.size == 0:
        return Partition(users, tuple(range(len(users))))
    return louvain_communities(graph, seed=seed)


# ---------------------------------------------------------------------------
# Behavioral symbol strings
# ---------------------------------------------------------------------------

_PAUSE_BINS = (
    (3600.0, "."),          # up to one hour
    (DAY_S, "-"),           # up to one day
    (7 * DAY_S, "~"),       # up to one week
    (30 * DAY_S, "="),      # up to one month
    (365 * DAY_S, "+"),     # up to one year
)
_PAUSE_OVERFLOW = "^"
_PAUSE_THRESHOLD_S = 60.0

_CONTENT_CHARS = ((HASHTAG_TYPE, "h"), ("mention", "m"), ("url", "u"))


def _pause_symbol(gap_s: float) -> str:
    for bound, sym in _PAUSE_BINS:
        if gap_s <= bound:
            return sym
    return _PAUSE_OVERFLOW


def behavior_string(posts: Sequence[Post]) -> str:
    """Symbol string of one user's timeline: action char per post (original,
    reshare of another, self-reshare), content chars for text/hashtag/
    mention/url presence, pause symbols for gaps over one minute."""
    out: list[str] = []
    prev_t: float | None = None
    for post in posts:
        if prev_t is not None:
            gap = post.timestamp - prev_t
            if gap > _PAUSE_THRESHOLD_S:
                out.append(_pause_symbol(gap))
        prev_t = post.timestamp
        sources = [e.source_user for e in post.events if e.source_user]
        if sources:
            out.append("s" if sources[0] == post.user else "r")
        else:
            out.append("o")
        if post.text:
            out.append("t")
        present = {e.action_type for e in post.events}
        for a, char in _CONTENT_CHARS:
            if a in present:
                out.append(char)
    return "".join(out)


def _bigrams(s: str) -> list[str]:
    return [s[i:i + 2] for i in range(len(s) - 1)]


def bloc_detector(dataset: Dataset, threshold: float = 0.98,
                  seed: int = 0) -> DetectionResult:
    """Cluster users by cosine similarity of behavioral bigram TF-IDF.

    Users whose symbol-string bigram vectors have cosine similarity at or
    above the threshold are linked; linked users are clustered with plain
    Louvain and everyone else stays a singleton.
    """
    from sklearn.feature_extraction.text import TfidfVectorizer

    per_user: dict[str, list[Post]] = {u: [] for u in dataset.users}
    for post in group_posts(dataset):
        per_user[post.user].append(post)
    users = sorted(dataset.users)
    strings = [behavior_string(per_user[u]) for u in users]
    weights: dict[tuple[str, str], float] = {}
    docs = [(u, s) for u, s in zip(users, strings) if len(s) >= 2]
    if docs:
        vec = TfidfVectorizer(analyzer=_bigrams, lowercase=False)
        tfidf = vec.fit_transform([s for _, s in docs])
        sims = (tfidf @ tfidf.T).toarray()
        for i in range(len(docs)):
            for j in range(i + 1, len(docs)):
                if sims[i, j] >= threshold:
                    weights[(docs[i][0], docs[j][0])] = float(sims[i, j])
    partition = _partition_from_edges(dataset, weights, seed, action_type="bloc")
    return DetectionResult(
        method_name="bloc", kind="partition",
        parameters={"threshold": threshold, "seed": seed},
        partition=partition)


BASELINES = {
    "hashtag-sequences": hashtag_sequences,
    "rapid-retweets": rapid_retweets,
    "coretweet-cardinality": coretweet_cardinality,
    "ratcliff-obershelp": ratcliff_obershelp,
    "synchronized-actions": synchronized_actions,
    "bloc": bloc_detector,
}
