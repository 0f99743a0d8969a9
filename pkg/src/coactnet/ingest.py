"""Parsing, validation and indexing of timestamped action logs.

The canonical record is one (user, timestamp, action_type, content) tuple
per atomic action; a single post may yield several records sharing one
timestamp (one per hashtag, mention, ...). Optional fields carry what the
reference detectors need: the enclosing post id, the post text, and the
reshared post's author and publication time.

Inputs are JSONL (one object per line) or CSV (header row); field names
are remappable so arbitrary platform exports can be ingested unchanged.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, UnknownActionTypeError, ValidationError

log = logging.getLogger(__name__)

REQUIRED_FIELDS = ("user", "timestamp", "action_type", "content")
OPTIONAL_FIELDS = ("post_id", "text", "source_user", "source_timestamp")

COORDINATED = "coordinated"
AUTHENTIC = "authentic"


@dataclass(frozen=True, slots=True)
class ActionEvent:
    """One atomic action: a user touching one piece of content at one time."""

    user: str
    timestamp: float
    action_type: str
    content: str
    post_id: str | None = None
    text: str | None = None
    source_user: str | None = None
    source_timestamp: float | None = None

    def key(self) -> tuple[str, float, str, str]:
        return (self.user, self.timestamp, self.action_type, self.content)


@dataclass(frozen=True)
class Dataset:
    """A validated, timestamp-sorted collection of events."""

    events: tuple[ActionEvent, ...]
    users: frozenset[str]
    action_types: frozenset[str]
    time_span: tuple[float, float] | None

    @classmethod
    def from_events(cls, events: Iterable[ActionEvent],
                    action_types: Iterable[str] | None = None) -> "Dataset":
        """Sort by timestamp, drop exact duplicate tuples, validate."""
        declared = frozenset(action_types) if action_types is not None else None
        seen: set[tuple] = set()
        kept: list[ActionEvent] = []
        for ev in events:
            if ev.timestamp < 0:
                raise ValidationError(f"negative timestamp {ev.timestamp} for user {ev.user!r}")
            if declared is not None and ev.action_type not in declared:
                raise UnknownActionTypeError(
                    f"action type {ev.action_type!r} is not in the declared set")
            k = ev.key()
            if k in seen:
                continue
            seen.add(k)
            kept.append(ev)
        kept.sort(key=lambda e: e.timestamp)
        users = frozenset(e.user for e in kept)
        types = declared if declared is not None else frozenset(e.action_type for e in kept)
        span = (kept[0].timestamp, kept[-1].timestamp) if kept else None
        return cls(tuple(kept), users, types, span)

    def __len__(self) -> int:
        return len(self.events)


def _open_text(source) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8")


def _resolve_field_map(field_map: Mapping[str, str] | None) -> dict[str, str]:
    fm = {name: name for name in REQUIRED_FIELDS + OPTIONAL_FIELDS}
    if field_map:
        for logical, actual in field_map.items():
            if logical not in fm:
                raise ValidationError(f"unknown logical field {logical!r} in field map")
            fm[logical] = actual
    return fm


def _event_from_record(rec: Mapping[str, object], fm: Mapping[str, str],
                       lineno: int) -> ActionEvent:
    vals = {}
    for logical in REQUIRED_FIELDS:
        actual = fm[logical]
        if actual not in rec or rec[actual] in (None, ""):
            raise ParseError(f"missing field {actual!r}", lineno)
        vals[logical] = rec[actual]
    try:
        ts = float(vals["timestamp"])  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise ParseError(f"timestamp {vals['timestamp']!r} is not a number", lineno)
    if ts < 0:
        raise ValidationError(f"line {lineno}: negative timestamp {ts}")
    extras: dict[str, object] = {}
    for logical in OPTIONAL_FIELDS:
        actual = fm[logical]
        raw = rec.get(actual)
        if raw in (None, ""):
            continue
        if logical == "source_timestamp":
            try:
                extras[logical] = float(raw)  # type: ignore[arg-type]
            except (TypeError, ValueError):
                raise ParseError(f"source timestamp {raw!r} is not a number", lineno)
        else:
            extras[logical] = str(raw)
    return ActionEvent(
        user=str(vals["user"]),
        timestamp=ts,
        action_type=str(vals["action_type"]),
        content=str(vals["content"]),
        **extras,  # type: ignore[arg-type]
    )


def parse_events(source, fmt: str = "jsonl",
                 field_map: Mapping[str, str] | None = None,
                 action_types: Iterable[str] | None = None) -> Dataset:
    """Parse a JSONL or CSV event stream into a Dataset.

    Events are sorted by timestamp and exact duplicate tuples are collapsed
    to one. When ``action_types`` declares a closed set, any record outside
    it is a validation error; otherwise the set is inferred from the data.
    """
    fm = _resolve_field_map(field_map)
    declared = frozenset(action_types) if action_types is not None else None
    events: list[ActionEvent] = []
    stream = _open_text(source)
    try:
        if fmt == "jsonl":
            for lineno, line in enumerate(stream, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON ({exc.msg})", lineno)
                if not isinstance(rec, dict):
                    raise ParseError("record is not an object", lineno)
                events.append(_event_from_record(rec, fm, lineno))
        elif fmt == "csv":
            reader = csv.DictReader(stream)
            for lineno, rec in enumerate(reader, start=2):
                events.append(_event_from_record(rec, fm, lineno))
        else:
            raise ValidationError(f"unknown input format {fmt!r}")
        if declared is not None:
            for ev in events:
                if ev.action_type not in declared:
                    raise UnknownActionTypeError(
                        f"action type {ev.action_type!r} is not in the declared set "
                        f"{sorted(declared)}")
    finally:
        if isinstance(source, (str, Path, bytes)):
            stream.close()
    return Dataset.from_events(events, action_types=declared)


def _event_record(ev: ActionEvent) -> dict:
    rec: dict[str, object] = {
        "user": ev.user,
        "timestamp": ev.timestamp,
        "action_type": ev.action_type,
        "content": ev.content,
    }
    for name in OPTIONAL_FIELDS:
        value = getattr(ev, name)
        if value is not None:
            rec[name] = value
    return rec


def write_events(dataset: Dataset, path, fmt: str = "jsonl") -> None:
    """Serialize a Dataset so that parse_events round-trips it."""
    path = Path(path)
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for ev in dataset.events:
                fh.write(json.dumps(_event_record(ev), sort_keys=True) + "\n")
    elif fmt == "csv":
        cols = list(REQUIRED_FIELDS + OPTIONAL_FIELDS)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            for ev in dataset.events:
                writer.writerow({c: _event_record(ev).get(c, "") for c in cols})
    else:
        raise ValidationError(f"unknown output format {fmt!r}")


class ActionIndex:
    """Per action type: content key -> user -> ascending timestamp array.

    ``n_k`` counts distinct users under a content key, ignoring repetitions.
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, action_type: str,
                 data: Mapping[str, Mapping[str, np.ndarray]]):
        self.action_type = action_type
        self._data = {
            k: {u: np.asarray(ts, dtype=np.float64) for u, ts in users.items()}
            for k, users in data.items()
        }

    def contents(self) -> list[str]:
        return sorted(self._data)

    def users_of(self, content: str) -> list[str]:
        return sorted(self._data[content])

    def timestamps(self, content: str, user: str) -> np.ndarray:
        return self._data[content][user]

    def n_k(self, content: str) -> int:
        return len(self._data[content])

    def all_users(self) -> frozenset[str]:
        return frozenset(u for users in self._data.values() for u in users)

    def event_count(self) -> int:
        return sum(ts.size for users in self._data.values() for ts in users.values())

    def __len__(self) -> int:
        return len(self._data)


def _index_events(action_type: str, events: Iterable[ActionEvent],
                  key_fn) -> ActionIndex:
    data: dict[str, dict[str, list[float]]] = {}
    for ev in events:
        data.setdefault(key_fn(ev), {}).setdefault(ev.user, []).append(ev.timestamp)
    arrays = {
        k: {u: np.unique(np.asarray(ts, dtype=np.float64)) for u, ts in users.items()}
        for k, users in data.items()
    }
    return ActionIndex(action_type, arrays)


def build_action_index(dataset: Dataset, action_type: str) -> ActionIndex:
    """Index the events of one action type by content key and user."""
    if action_type not in dataset.action_types:
        raise UnknownActionTypeError(
            f"action type {action_type!r} is not in the dataset's set "
            f"{sorted(dataset.action_types)}")
    return _index_events(
        action_type,
        (ev for ev in dataset.events if ev.action_type == action_type),
        lambda ev: ev.content,
    )


def build_combined_index(dataset: Dataset) -> ActionIndex:
    """Index all events as a single layer, namespacing keys by action type.

    Two contents of different action types never count as the same action,
    so keys become ``"<action_type>:<content>"``.
    """
    return _index_events(
        "all",
        dataset.events,
        lambda ev: f"{ev.action_type}:{ev.content}",
    )


@dataclass(frozen=True)
class GroundTruth:
    """user -> {coordinated, authentic}, with an optional campaign id per user."""

    labels: Mapping[str, str]
    campaigns: Mapping[str, str] = field(default_factory=dict)

    @property
    def positives(self) -> frozenset[str]:
        return frozenset(u for u, lab in self.labels.items() if lab == COORDINATED)

    def label_of(self, user: str) -> str:
        return self.labels.get(user, AUTHENTIC)

    def class_labels(self, users: Sequence[str], warn: bool = True) -> list[str]:
        """Per-user class labels over ``users``; campaign ids split the positives.

        Users absent from the label map default to authentic (with a warning),
        since real label files usually cover only the campaign side.
        """
        missing = [u for u in users if u not in self.labels]
        if missing and warn:
            log.warning("%d of %d users unlabeled; defaulting them to authentic",
                        len(missing), len(users))
        out = []
        for u in users:
            if self.labels.get(u) == COORDINATED:
                out.append(self.campaigns.get(u, COORDINATED))
            else:
                out.append(AUTHENTIC)
        return out


def load_ground_truth(source) -> GroundTruth:
    """Load a CSV with columns user,label[,campaign]."""
    stream = _open_text(source)
    labels: dict[str, str] = {}
    campaigns: dict[str, str] = {}
    try:
        reader = csv.DictReader(stream)
        if reader.fieldnames is None:
            return GroundTruth({}, {})
        for col in ("user", "label"):
            if col not in reader.fieldnames:
                raise ValidationError(f"ground truth is missing column {col!r}")
        for lineno, rec in enumerate(reader, start=2):
            user = rec["user"]
            label = (rec["label"] or "").strip().lower()
            if user in labels:
                raise ValidationError(f"line {lineno}: duplicate user {user!r}")
            if label not in (COORDINATED, AUTHENTIC):
                raise ValidationError(
                    f"line {lineno}: unknown label {rec['label']!r} "
                    f"(expected {COORDINATED!r} or {AUTHENTIC!r})")
            labels[user] = label
            campaign = (rec.get("campaign") or "").strip()
            if campaign and label == COORDINATED:
                campaigns[user] = campaign
    finally:
        if isinstance(source, (str, Path, bytes)):
            stream.close()
    return GroundTruth(labels, campaigns)


def write_ground_truth(gt: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "label", "campaign"])
        for user in sorted(gt.labels):
            writer.writerow([user, gt.labels[user], gt.campaigns.get(user, "")])
