"""Snapshot-event ingestion: parsing, validation, cutoff, resampling.

Event files are JSON Lines (one object per line) or CSV with a fixed
header. A Dataset keeps events sorted by (timestamp, netuid, wallet) and
enforces that every (wallet, netuid) pair holds a single role across the
whole file. Resampling aggregates events into calendar-aligned UTC windows
where stake and perf are the last observation in the window and reward is
the sum over the window.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import BinaryIO, Iterable, Optional

from yumalab._util import format_timestamp, parse_timestamp
from yumalab.model import (
    Role,
    SnapshotEntry,
    SnapshotEvent,
    SubnetSnapshot,
    ValidationError,
)

__all__ = [
    "EVENT_COLUMNS",
    "DTAO_CUTOFF",
    "FREQUENCIES",
    "ParseError",
    "RoleConsistencyError",
    "Dataset",
    "parse_events",
    "load_events",
    "write_events",
    "save_events",
    "apply_cutoff",
    "resample",
    "history_snapshots",
]

# Fixed CSV column order; empty string means an absent score.
EVENT_COLUMNS = (
    "timestamp",
    "block_number",
    "netuid",
    "wallet",
    "role",
    "stake",
    "reward",
    "trust",
    "validator_trust",
)

# The dTAO upgrade instant; analyses default to data strictly before it.
DTAO_CUTOFF = datetime(2025, 2, 13, tzinfo=timezone.utc)

FREQUENCIES = ("daily", "weekly", "monthly")


class ParseError(ValidationError):
    """A malformed input line, carrying its 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RoleConsistencyError(ValidationError):
    """Same (wallet, netuid) pair observed under two different roles."""

    def __init__(self, pairs: Iterable[tuple[str, int]]):
        self.pairs = tuple(sorted(pairs))
        listing = ", ".join(f"({wallet!r}, netuid={netuid})" for wallet, netuid in self.pairs)
        super().__init__(f"role conflicts for {len(self.pairs)} (wallet, netuid) pair(s): {listing}")


@dataclass(frozen=True)
class Dataset:
    """An immutable, validated collection of snapshot events.

    `cutoff` records the exclusion bound applied to the data; None means
    no cutoff has been applied yet.
    """

    events: tuple[SnapshotEvent, ...]
    cutoff: Optional[datetime] = None

    def __post_init__(self) -> None:
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        previous_key = None
        for event in events:
            if not isinstance(event, SnapshotEvent):
                raise ValidationError("events must be SnapshotEvent instances")
            key = (event.timestamp, event.netuid, event.wallet)
            if previous_key is not None and key < previous_key:
                raise ValidationError(
                    "events must be sorted by (timestamp, netuid, wallet); "
                    f"{key} follows {previous_key}"
                )
            previous_key = key
        if self.cutoff is not None:
            cutoff = self.cutoff
            if cutoff.tzinfo is None:
                raise ValidationError("cutoff must be timezone-aware")
            cutoff = cutoff.astimezone(timezone.utc)
            object.__setattr__(self, "cutoff", cutoff)
            for event in events:
                if event.timestamp >= cutoff:
                    raise ValidationError(
                        f"event at {format_timestamp(event.timestamp)} is not before "
                        f"the cutoff {format_timestamp(cutoff)}"
                    )
        _check_role_consistency(events)

    @classmethod
    def from_events(cls, events: Iterable[SnapshotEvent], cutoff: Optional[datetime] = None) -> "Dataset":
        """Sort events into canonical order and validate."""
        ordered = sorted(events, key=lambda e: (e.timestamp, e.netuid, e.wallet))
        return cls(events=tuple(ordered), cutoff=cutoff)

    def __len__(self) -> int:
        return len(self.events)

    def netuids(self) -> list[int]:
        return sorted({event.netuid for event in self.events})


def _check_role_consistency(events: Iterable[SnapshotEvent]) -> None:
    roles: dict[tuple[str, int], Role] = {}
    conflicts: set[tuple[str, int]] = set()
    for event in events:
        key = (event.wallet, event.netuid)
        known = roles.setdefault(key, event.role)
        if known is not event.role:
            conflicts.add(key)
    if conflicts:
        raise RoleConsistencyError(conflicts)


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------


def _optional_score(raw, field: str, line: int) -> Optional[float]:
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ParseError(line, f"invalid {field}: {raw!r}") from None


def _required_float(raw, field: str, line: int) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ParseError(line, f"invalid {field}: {raw!r}") from None


def _required_int(raw, field: str, line: int) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ParseError(line, f"invalid {field}: {raw!r}") from None


def _event_from_fields(fields: dict, line: int) -> SnapshotEvent:
    missing = [c for c in EVENT_COLUMNS[:7] if fields.get(c) in (None, "")]
    if missing:
        raise ParseError(line, f"missing required field(s): {', '.join(missing)}")
    try:
        timestamp = parse_timestamp(str(fields["timestamp"]))
    except ValueError as exc:
        raise ParseError(line, str(exc)) from None
    try:
        return SnapshotEvent(
            timestamp=timestamp,
            block_number=_required_int(fields["block_number"], "block_number", line),
            netuid=_required_int(fields["netuid"], "netuid", line),
            wallet=str(fields["wallet"]),
            role=Role.parse(str(fields["role"])),
            stake=_required_float(fields["stake"], "stake", line),
            reward=_required_float(fields["reward"], "reward", line),
            trust=_optional_score(fields.get("trust"), "trust", line),
            validator_trust=_optional_score(fields.get("validator_trust"), "validator_trust", line),
        )
    except ParseError:
        raise
    except ValidationError as exc:
        raise ParseError(line, str(exc)) from None


def parse_events(source: BinaryIO, format: str = "jsonl") -> Dataset:
    """Parse an event stream into a validated Dataset.

    Raises ParseError (with the offending 1-based line number) on malformed
    input and RoleConsistencyError when a (wallet, netuid) pair appears
    under both roles.
    """
    if format not in ("jsonl", "csv"):
        raise ValidationError(f"unknown format {format!r} (expected jsonl or csv)")
    text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    try:
        if format == "jsonl":
            events = _parse_jsonl(text)
        else:
            events = _parse_csv(text)
    finally:
        text.detach()
    return Dataset.from_events(events)


def _parse_jsonl(text: io.TextIOWrapper) -> list[SnapshotEvent]:
    events: list[SnapshotEvent] = []
    for line_number, line in enumerate(text, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(line_number, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ParseError(line_number, "expected a JSON object")
        events.append(_event_from_fields(obj, line_number))
    return events


def _parse_csv(text: io.TextIOWrapper) -> list[SnapshotEvent]:
    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        return []
    if tuple(header) != EVENT_COLUMNS:
        raise ParseError(1, f"unexpected CSV header {header!r}")
    events: list[SnapshotEvent] = []
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(EVENT_COLUMNS):
            raise ParseError(line_number, f"expected {len(EVENT_COLUMNS)} columns, got {len(row)}")
        events.append(_event_from_fields(dict(zip(EVENT_COLUMNS, row)), line_number))
    return events


def load_events(path, format: Optional[str] = None) -> Dataset:
    """Parse a file path, inferring the format from the suffix by default."""
    path = str(path)
    if format is None:
        format = "csv" if path.endswith(".csv") else "jsonl"
    with open(path, "rb") as handle:
        return parse_events(handle, format=format)


def _event_to_mapping(event: SnapshotEvent) -> dict:
    obj = {
        "timestamp": format_timestamp(event.timestamp),
        "block_number": event.block_number,
        "netuid": event.netuid,
        "wallet": event.wallet,
        "role": event.role.value,
        "stake": event.stake,
        "reward": event.reward,
    }
    if event.trust is not None:
        obj["trust"] = event.trust
    if event.validator_trust is not None:
        obj["validator_trust"] = event.validator_trust
    return obj


def _score_cell(score: Optional[float]) -> str:
    return "" if score is None else repr(score)


def write_events(events: Iterable[SnapshotEvent], sink: BinaryIO, format: str = "jsonl") -> None:
    """Serialize events in a form parse_events reads back losslessly.

    Floats are written with full round-trip precision (repr), so a
    write/parse cycle reproduces the exact same values.
    """
    if format not in ("jsonl", "csv"):
        raise ValidationError(f"unknown format {format!r} (expected jsonl or csv)")
    text = io.TextIOWrapper(sink, encoding="utf-8", newline="")
    try:
        if format == "jsonl":
            for event in events:
                json.dump(_event_to_mapping(event), text, separators=(",", ":"))
                text.write("\n")
        else:
            writer = csv.writer(text, lineterminator="\n")
            writer.writerow(EVENT_COLUMNS)
            for event in events:
                writer.writerow(
                    (
                        format_timestamp(event.timestamp),
                        event.block_number,
                        event.netuid,
                        event.wallet,
                        event.role.value,
                        repr(event.stake),
                        repr(event.reward),
                        _score_cell(event.trust),
                        _score_cell(event.validator_trust),
                    )
                )
        text.flush()
    finally:
        text.detach()


def save_events(events: Iterable[SnapshotEvent], path, format: Optional[str] = None) -> None:
    path = str(path)
    if format is None:
        format = "csv" if path.endswith(".csv") else "jsonl"
    with open(path, "wb") as handle:
        write_events(events, handle, format=format)


# ---------------------------------------------------------------------------
# Cutoff and resampling
# ---------------------------------------------------------------------------


def apply_cutoff(dataset: Dataset, cutoff: datetime = DTAO_CUTOFF) -> Dataset:
    """Keep exactly the events with timestamp strictly before the cutoff."""
    if cutoff.tzinfo is None:
        raise ValidationError("cutoff must be timezone-aware")
    cutoff = cutoff.astimezone(timezone.utc)
    kept = tuple(event for event in dataset.events if event.timestamp < cutoff)
    return Dataset(events=kept, cutoff=cutoff)


def _window_start(ts: datetime, freq: str) -> datetime:
    day = datetime(ts.year, ts.month, ts.day, tzinfo=timezone.utc)
    if freq == "daily":
        return day
    if freq == "weekly":
        return day - timedelta(days=day.weekday())
    return datetime(ts.year, ts.month, 1, tzinfo=timezone.utc)


def _window_end(start: datetime, freq: str) -> datetime:
    if freq == "daily":
        return start + timedelta(days=1)
    if freq == "weekly":
        return start + timedelta(days=7)
    if start.month == 12:
        return datetime(start.year + 1, 1, 1, tzinfo=timezone.utc)
    return datetime(start.year, start.month + 1, 1, tzinfo=timezone.utc)


def _build_snapshots(
    groups: dict[tuple[int, datetime], dict[str, tuple[SnapshotEvent, list[float]]]],
    window_end,
) -> list[SubnetSnapshot]:
    snapshots = []
    for (netuid, start) in sorted(groups):
        per_wallet = groups[(netuid, start)]
        entries = tuple(
            SnapshotEntry(
                wallet=wallet,
                role=last.role,
                stake=last.stake,
                reward=math.fsum(rewards),
                perf=last.perf,
            )
            for wallet, (last, rewards) in sorted(per_wallet.items())
        )
        snapshots.append(
            SubnetSnapshot(
                netuid=netuid,
                window_start=start,
                window_end=window_end(start),
                entries=entries,
            )
        )
    return snapshots


def resample(dataset: Dataset, freq: str = "daily") -> list[SubnetSnapshot]:
    """Aggregate events into per-(netuid, window) snapshots.

    Windows are calendar-aligned UTC: days at 00:00, weeks starting Monday,
    months at the 1st. Within a window, stake and perf come from the
    wallet's last event and reward is the sum of its rewards.
    """
    if freq not in FREQUENCIES:
        raise ValidationError(f"unknown frequency {freq!r} (expected one of {FREQUENCIES})")
    if not dataset.events:
        raise ValidationError("cannot resample an empty dataset")
    groups: dict[tuple[int, datetime], dict[str, tuple[SnapshotEvent, list[float]]]] = {}
    for event in dataset.events:
        key = (event.netuid, _window_start(event.timestamp, freq))
        per_wallet = groups.setdefault(key, {})
        previous = per_wallet.get(event.wallet)
        rewards = previous[1] if previous is not None else []
        rewards.append(event.reward)
        per_wallet[event.wallet] = (event, rewards)
    return _build_snapshots(groups, lambda start: _window_end(start, freq))


def history_snapshots(dataset: Dataset) -> list[SubnetSnapshot]:
    """Collapse the whole dataset into one snapshot per netuid.

    The window spans from the first event's day to the day after the last
    event's day, shared by all subnets; aggregation follows the resample
    rules (last stake/perf, summed reward).
    """
    if not dataset.events:
        raise ValidationError("cannot aggregate an empty dataset")
    first = _window_start(dataset.events[0].timestamp, "daily")
    last = max(event.timestamp for event in dataset.events)
    end = _window_start(last, "daily") + timedelta(days=1)
    groups: dict[tuple[int, datetime], dict[str, tuple[SnapshotEvent, list[float]]]] = {}
    for event in dataset.events:
        key = (event.netuid, first)
        per_wallet = groups.setdefault(key, {})
        previous = per_wallet.get(event.wallet)
        rewards = previous[1] if previous is not None else []
        rewards.append(event.reward)
        per_wallet[event.wallet] = (event, rewards)
    return _build_snapshots(groups, lambda start: end)
