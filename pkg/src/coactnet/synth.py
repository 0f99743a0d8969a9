"""Synthetic activity datasets: background noise plus coordinated patterns.

A dataset mixes 40 authentic accounts emitting 1000 uniformly timestamped
actions over 7 days with 6 coordinated accounts emitting 15-20 actions
arranged in one of three temporal patterns:

1. a single near-synchronous burst shared by all six accounts;
2. several active windows separated by silence, all six active in each;
3. alternating windows in which only a proper subset of the six is active.

Twenty contents spread over three action types form the shared vocabulary;
content popularity follows a bimodal mixture so some actions are much more
common than others. The coordinated group works from a small per-modality
action pool (primary action used 9 times out of 10).

All randomness derives from one seed through named substreams, so the
content universe, background and pattern are independently reproducible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .ingest import (AUTHENTIC, COORDINATED, ActionEvent, Dataset, GroundTruth,
                     write_events, write_ground_truth)

MINUTE = 60.0
DAY = 86400.0

_STREAM_CONTENTS = 0
_STREAM_BACKGROUND = 1
_STREAM_PATTERN = 2


@dataclass(frozen=True)
class SimulationConfig:
    n_inauthentic: int = 6
    inauthentic_total_actions: tuple[int, int] = (15, 20)
    n_authentic: int = 40
    authentic_total_actions: int = 1000
    horizon_s: float = 7 * DAY
    n_contents: int = 20
    action_types: tuple[str, ...] = ("hashtag", "mention", "url")
    popularity_means: tuple[float, float] = (3.0, 12.0)
    popularity_weight: float = 0.6
    action_pair_probs: tuple[float, float] = (0.9, 0.1)
    n_reserved_per_type: int = 3
    burst_rate_per_min: float = 1.3
    window_rate_per_min: float = 1.0
    alternating_rates_per_min: tuple[float, ...] = (1.0, 1.2, 1.3, 1.5)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.inauthentic_total_actions
        if not (0 < lo <= hi):
            raise ValidationError("inauthentic_total_actions must be a positive range")
        if not (0 <= self.popularity_weight <= 1):
            raise ValidationError("popularity_weight must be in [0, 1]")
        p, q = self.action_pair_probs
        if not (0 <= p <= 1 and 0 <= q <= 1):
            raise ValidationError("action_pair_probs must be probabilities")
        if self.n_contents < len(self.action_types):
            raise ValidationError("need at least one content per action type")


def _rng(cfg_seed: int, seed: int | None, stream: int) -> np.random.Generator:
    base = cfg_seed if seed is None else seed
    return np.random.default_rng(np.random.SeedSequence([int(base), stream]))


def authentic_ids(cfg: SimulationConfig) -> list[str]:
    return [f"auth{i:03d}" for i in range(cfg.n_authentic)]

def coordinated_ids(cfg: SimulationConfig) -> list[str]:
    return [f"coord{i:02d}" for i in range(cfg.n_inauthentic)]


@dataclass(frozen=True)
class ContentUniverse:
    """The action vocabulary: ids, type binding, popularity and campaign slice.

    The least popular few contents of each modality are reserved as the
    campaign's own vocabulary (a coordinated group pushes its own hashtags
    and links); organic background activity spreads over the rest.
    """

    contents: tuple[str, ...]
    types: tuple[str, ...]
    probs: np.ndarray
    reserved: frozenset[str]

    def of_type(self, action_type: str) -> list[str]:
        return [c for c, t in zip(self.contents, self.types) if t == action_type]

    def reserved_of_type(self, action_type: str) -> list[str]:
        return [c for c in self.of_type(action_type) if c in self.reserved]

    def open_probs(self) -> tuple[list[str], np.ndarray]:
        """Non-reserved contents with renormalized selection probabilities."""
        keep = [i for i, c in enumerate(self.contents) if c not in self.reserved]
        probs = self.probs[keep]
        return [self.contents[i] for i in keep], probs / probs.sum()


def build_contents(cfg: SimulationConfig, seed: int | None = None) -> ContentUniverse:
    """Draw content popularity from the bimodal mixture and bind types.

    Samples that would round below one are redrawn; the sampled frequencies
    are then normalized into selection probabilities. Types are bound by a
    shuffled round-robin so every action type gets contents.
    """
    rng = _rng(cfg.seed, seed, _STREAM_CONTENTS)
    contents = tuple(f"content{i:02d}" for i in range(cfg.n_contents))
    freqs = np.empty(cfg.n_contents)
    mu_lo, mu_hi = cfg.popularity_means
    for i in range(cfg.n_contents):
        while True:
            mu = mu_lo if rng.random() < cfg.popularity_weight else mu_hi
            f = rng.normal(mu, 1.0)
            if round(f) >= 1:
                freqs[i] = f
                break
    order = rng.permutation(cfg.n_contents)
    types = [""] * cfg.n_contents
    for slot, idx in enumerate(order):
        types[idx] = cfg.action_types[slot % len(cfg.action_types)]
    probs = freqs / freqs.sum()
    reserved: set[str] = set()
    for a in cfg.action_types:
        of_a = [i for i in range(cfg.n_contents) if types[i] == a]
        of_a.sort(key=lambda i: (probs[i], i))
        reserved.update(contents[i] for i in of_a[:cfg.n_reserved_per_type])
    return ContentUniverse(contents, tuple(types), probs, frozenset(reserved))


def generate_background(cfg: SimulationConfig,
                        seed: int | None = None) -> tuple[list[ActionEvent], GroundTruth]:
    """Uniformly timestamped, user-independent authentic activity."""
    universe = build_contents(cfg, seed)
    rng = _rng(cfg.seed, seed, _STREAM_BACKGROUND)
    users = authentic_ids(cfg)
    n = cfg.authentic_total_actions
    who = rng.integers(0, len(users), size=n)
    when = rng.uniform(0.0, cfg.horizon_s, size=n) if cfg.horizon_s > 0 else np.zeros(n)
    open_contents, open_probs = universe.open_probs()
    type_of = dict(zip(universe.contents, universe.types))
    what = rng.choice(len(open_contents), size=n, p=open_probs)
    events = [
        ActionEvent(
            user=users[who[i]],
            timestamp=float(when[i]),
            action_type=type_of[open_contents[what[i]]],
            content=open_contents[what[i]],
        )
        for i in range(n)
    ]
    gt = GroundTruth({u: AUTHENTIC for u in users})
    return events, gt


def _campaign_actions(cfg: SimulationConfig, universe: ContentUniverse,
                      rng: np.random.Generator) -> dict[str, list[str]]:
    """Per modality: the campaign's small pool of distinct actions.

    The pool size is drawn from {1, 2, 3} with mean 2; the first entry is
    the primary action (used with probability 0.9), the rest share the
    remainder. Pools come from the modality's reserved campaign slice.
    """
    pools: dict[str, list[str]] = {}
    for a in cfg.action_types:
        available = universe.reserved_of_type(a)
        count = min(int(rng.choice([1, 2, 3], p=[0.25, 0.5, 0.25])), len(available))
        picks = rng.choice(len(available), size=count, replace=False)
        pools[a] = [available[i] for i in picks]
    return pools


def _window_slots(cfg: SimulationConfig, n_windows: int, lengths_s: list[float],
                  rng: np.random.Generator, clearance_s: float = 3600.0) -> list[float]:
    """Start offsets for non-overlapping windows, one per equal horizon slot."""
    slot = cfg.horizon_s / n_windows
    starts = []
    for w in range(n_windows):
        lo = w * slot
        hi = max(lo, (w + 1) * slot - lengths_s[w] - clearance_s)
        starts.append(float(rng.uniform(lo, hi)) if hi > lo else lo)
    return starts


def _pick_action(cfg: SimulationConfig, rng: np.random.Generator,
                 pools: dict[str, list[str]]) -> tuple[str, str]:
    """One push action: uniform modality, primary content with probability 0.9."""
    a = cfg.action_types[rng.integers(0, len(cfg.action_types))]
    pool = pools[a]
    if len(pool) == 1 or rng.random() < cfg.action_pair_probs[0]:
        return a, pool[0]
    return a, pool[1 + rng.integers(0, len(pool) - 1)]


def _emit_window(rng: np.random.Generator, active: list[str], start_s: float,
                 count: int, rate_per_min: float,
                 action: tuple[str, str]) -> list[ActionEvent]:
    """Uniform timestamps over one active window; every active user acts.

    The rate is per active account, so the window spans
    count / (rate * n_active) minutes and stays nearly synchronous. All
    events in the window push the same action.
    """
    length_s = count / (rate_per_min * len(active)) * MINUTE
    times = np.sort(rng.uniform(start_s, start_s + length_s, size=count))
    who = active + [active[rng.integers(0, len(active))] for _ in range(count - len(active))]
    rng.shuffle(who)
    action_type, content = action
    return [ActionEvent(user=who[i], timestamp=float(times[i]),
                        action_type=action_type, content=content)
            for i in range(count)]


def generate_pattern(kind: int, cfg: SimulationConfig,
                     seed: int | None = None) -> tuple[list[ActionEvent], GroundTruth]:
    """Coordinated activity arranged per pattern kind (1, 2 or 3)."""
    if kind not in (1, 2, 3):
        raise ValidationError(f"unknown pattern kind {kind!r}")
    universe = build_contents(cfg, seed)
    rng = _rng(cfg.seed, seed, _STREAM_PATTERN)
    group = coordinated_ids(cfg)
    pools = _campaign_actions(cfg, universe, rng)
    lo, hi = cfg.inauthentic_total_actions
    total = int(rng.integers(lo, hi + 1))

    if kind == 1:
        counts = [total]
        rates = [cfg.burst_rate_per_min]
        actives = [group]
    elif kind == 2:
        counts = [total // 2, total - total // 2]
        rates = [cfg.window_rate_per_min] * 2
        actives = [group, group]
    else:
        rates = list(cfg.alternating_rates_per_min)
        n_win = len(rates)
        half = len(group) // 2
        subsets = [group[:half], group[half:]]
        actives = [subsets[w % 2] for w in range(n_win)]
        base = max(len(s) for s in subsets)
        extra = rng.multinomial(max(total - base * n_win, 0), [1.0 / n_win] * n_win)
        counts = [base + int(extra[w]) for w in range(n_win)]

    lengths = [c / (r * len(a)) * MINUTE for c, r, a in zip(counts, rates, actives)]
    starts = _window_slots(cfg, len(counts), lengths, rng)
    # Patterns 1 and 2 pick a push action per window; the alternating pattern
    # keeps one action across its shifts, which is what makes the disjoint
    # active subsets recognizably one campaign (and keeps every member in
    # the action's audience count).
    shared_action = _pick_action(cfg, rng, pools) if kind == 3 else None
    events: list[ActionEvent] = []
    for start, count, rate, active in zip(starts, counts, rates, actives):
        action = shared_action if shared_action else _pick_action(cfg, rng, pools)
        events.extend(_emit_window(rng, list(active), start, count, rate, action))
    gt = GroundTruth({u: COORDINATED for u in group},
                     {u: f"sim{kind}" for u in group})
    return events, gt


def assemble(background: tuple[list[ActionEvent], GroundTruth],
             pattern: tuple[list[ActionEvent], GroundTruth]) -> tuple[Dataset, GroundTruth]:
    """Merge background and pattern into one dataset with ground truth."""
    bg_events, bg_gt = background
    pt_events, pt_gt = pattern
    overlap = set(bg_gt.labels) & set(pt_gt.labels)
    if overlap:
        raise ValidationError(f"user id spaces overlap: {sorted(overlap)[:5]}")
    dataset = Dataset.from_events(list(bg_events) + list(pt_events))
    labels = dict(bg_gt.labels)
    labels.update(pt_gt.labels)
    campaigns = dict(bg_gt.campaigns)
    campaigns.update(pt_gt.campaigns)
    return dataset, GroundTruth(labels, campaigns)


def simulate(kind: int, seed: int | None = None,
             cfg: SimulationConfig = SimulationConfig()) -> tuple[Dataset, GroundTruth]:
    """Generate one full dataset: background plus the chosen pattern."""
    return assemble(generate_background(cfg, seed), generate_pattern(kind, cfg, seed))


def export_simulation(dataset: Dataset, gt: GroundTruth, out_dir) -> dict[str, Path]:
    """Write events (JSONL), ground truth (CSV) and an event raster (CSV)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "events": out / "events.jsonl",
        "ground_truth": out / "ground_truth.csv",
        "raster": out / "raster.csv",
    }
    write_events(dataset, paths["events"], fmt="jsonl")
    write_ground_truth(gt, paths["ground_truth"])
    with open(paths["raster"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "timestamp"])
        for ev in dataset.events:
            writer.writerow([ev.user, repr(ev.timestamp)])
    return paths
