"""Event-log ingestion: parse raw delimited logs, drop post-failure infected
intervals, resample categorical events into per-bucket occurrence counts, and
turn them into severity-ratio feature series.

The code grouping (which event codes belong to which machine module at which
severity) is configuration-driven so a dataset's exact code mapping can be
corrected without code changes; a default mapping for the ATM distribution
module ships with the package.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from statistics import median
from typing import Optional, Sequence

import numpy as np

from .core import EventRecord, LifeCycle, parse_timestamp

__all__ = [
    "SEVERITIES",
    "ConfigurationError",
    "ParseQualityError",
    "FeatureRecipe",
    "CodeGroupingConfig",
    "FailureMark",
    "LogFormat",
    "ParseResult",
    "parse_event_log",
    "remove_infected",
    "resample",
    "build_features",
    "dataset_stats",
    "DatasetStats",
    "GroupStats",
    "build_cycles",
    "IngestResult",
    "default_grouping",
    "save_cycle",
    "load_cycle",
    "load_cycles",
]

SEVERITIES = ("OK", "Warning", "Error")


class ConfigurationError(ValueError):
    """A grouping config references unknown codes, groups or severities."""


class ParseQualityError(ValueError):
    """More than 10% of the rows of an event log failed to parse."""

    def __init__(self, malformed: int, total: int):
        self.malformed = malformed
        self.total = total
        super().__init__(f"{malformed} of {total} rows malformed (> 10%)")


@dataclass(frozen=True)
class FeatureRecipe:
    """One ratio feature: sum of numerator-severity counts over the
    denominator-severity count within a set of code groups, denominator
    clamped at 1 so error bursts with zero OK events stay visible."""

    name: str
    groups: tuple[str, ...]
    numerator: tuple[str, ...]
    denominator: str = "OK"


@dataclass(frozen=True)
class CodeGroupingConfig:
    """event_code -> (group, severity) mapping plus the feature recipes."""

    codes: dict[str, tuple[str, str]]
    features: tuple[FeatureRecipe, ...]

    def __post_init__(self) -> None:
        groups = set()
        for code, (group, severity) in self.codes.items():
            if severity not in SEVERITIES:
                raise ConfigurationError(
                    f"code {code}: severity {severity!r} not in {SEVERITIES}")
            groups.add(group)
        for recipe in self.features:
            unknown = set(recipe.groups) - groups
            if unknown:
                raise ConfigurationError(
                    f"feature {recipe.name}: unknown groups {sorted(unknown)}")
            for sev in (*recipe.numerator, recipe.denominator):
                if sev not in SEVERITIES:
                    raise ConfigurationError(
                        f"feature {recipe.name}: bad severity {sev!r}")
            if not self._columns(recipe.groups, recipe.numerator):
                raise ConfigurationError(
                    f"feature {recipe.name}: no codes match its numerator")
            if not self._columns(recipe.groups, (recipe.denominator,)):
                raise ConfigurationError(
                    f"feature {recipe.name}: no codes match its denominator")

    def _columns(self, groups: Sequence[str], severities: Sequence[str]) -> list[str]:
        return [code for code, (g, s) in self.codes.items()
                if g in groups and s in severities]

    @property
    def relevant_codes(self) -> tuple[str, ...]:
        return tuple(sorted(self.codes))

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.features)

    def codes_in_group(self, group: str) -> tuple[str, ...]:
        return tuple(sorted(c for c, (g, _) in self.codes.items() if g == group))

    @classmethod
    def from_json(cls, text: str) -> "CodeGroupingConfig":
        doc = json.loads(text)
        try:
            codes = {str(code): (entry["group"], entry["severity"])
                     for code, entry in doc["codes"].items()}
            features = tuple(
                FeatureRecipe(name=f["name"], groups=tuple(f["groups"]),
                              numerator=tuple(f["numerator"]),
                              denominator=f.get("denominator", "OK"))
                for f in doc["features"])
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed grouping config: {exc}") from exc
        return cls(codes=codes, features=features)

    def to_json(self) -> str:
        doc = {
            "codes": {c: {"group": g, "severity": s}
                      for c, (g, s) in sorted(self.codes.items())},
            "features": [
                {"name": r.name, "groups": list(r.groups),
                 "numerator": list(r.numerator), "denominator": r.denominator}
                for r in self.features],
        }
        return json.dumps(doc, indent=2)


def default_grouping() -> CodeGroupingConfig:
    """The shipped ATM distribution-module mapping (15 codes, 4 ratio features)."""
    text = resources.files("maintseg").joinpath("data/atm_grouping.json").read_text()
    return CodeGroupingConfig.from_json(text)


@dataclass(frozen=True)
class FailureMark:
    atm_id: str
    failure_time: datetime
    module: str = "distribution"


@dataclass(frozen=True)
class LogFormat:
    """Column mapping of a delimited event log; names when there is a header
    row, 0-based indices otherwise. lifecycle is optional."""

    delimiter: str = ","
    timestamp: str | int = "timestamp"
    atm_id: str | int = "atm_id"
    lifecycle_id: str | int | None = "lifecycle_id"
    event_code: str | int = "event_code"
    has_header: bool = True

    @classmethod
    def from_json(cls, text: str) -> "LogFormat":
        doc = json.loads(text)
        return cls(**doc)


@dataclass
class ParseResult:
    records: list[EventRecord]
    malformed_count: int
    total_rows: int


def parse_event_log(source, fmt: LogFormat | None = None) -> ParseResult:
    """Parse a delimited event log into sorted records.

    ``source`` is a path or a text file object. Malformed rows are counted
    and reported, not silently dropped; more than 10% malformed raises
    :class:`ParseQualityError`.
    """
    fmt = fmt or LogFormat()
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_stream(fh, fmt)
    if isinstance(source, (bytes, bytearray)):
        return _parse_stream(io.StringIO(source.decode("utf-8")), fmt)
    return _parse_stream(source, fmt)


def _parse_stream(fh, fmt: LogFormat) -> ParseResult:
    reader = csv.reader(fh, delimiter=fmt.delimiter)
    columns: dict[str, int] = {}
    if fmt.has_header:
        header = next(reader, None)
        if header is not None:
            columns = {name.strip(): i for i, name in enumerate(header)}

    def col(spec: str | int, row: list[str]) -> str:
        idx = spec if isinstance(spec, int) else columns[spec]
        return row[idx].strip()

    records: list[EventRecord] = []
    malformed = 0
    total = 0
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        total += 1
        try:
            ts = parse_timestamp(col(fmt.timestamp, row))
            atm = col(fmt.atm_id, row)
            code = col(fmt.event_code, row)
            if not atm or not code:
                raise ValueError("empty field")
            lifecycle = 0
            if fmt.lifecycle_id is not None:
                lifecycle = int(col(fmt.lifecycle_id, row))
            records.append(EventRecord(atm, lifecycle, ts, code))
        except (ValueError, KeyError, IndexError):
            malformed += 1
    if total > 0 and malformed / total > 0.10:
        raise ParseQualityError(malformed, total)
    records.sort(key=lambda r: (r.atm_id, r.lifecycle_id, r.timestamp))
    return ParseResult(records, malformed, total)


def remove_infected(records: Sequence[EventRecord], failures: Sequence[FailureMark],
                    ii_days: float) -> list[EventRecord]:
    """Drop every record within [f, f + ii] of any failure f of its machine.

    An ii of zero removes nothing. Idempotent, and overlapping infected
    intervals simply union.
    """
    if ii_days <= 0:
        return list(records)
    spans: dict[str, list[tuple[datetime, datetime]]] = defaultdict(list)
    delta = timedelta(days=ii_days)
    for f in failures:
        spans[f.atm_id].append((f.failure_time, f.failure_time + delta))

    def infected(r: EventRecord) -> bool:
        return any(lo <= r.timestamp <= hi for lo, hi in spans.get(r.atm_id, ()))

    return [r for r in records if not infected(r)]


def resample(cycle_records: Sequence[EventRecord], period_hours: float,
             code_universe: Sequence[str]) -> np.ndarray:
    """Occurrence counts per (bucket, code) for one life cycle's records.

    Buckets of ``period_hours`` starting at the first record; rows with no
    events are explicit zeros. An event landing exactly on the final bucket
    boundary is counted in the last bucket.
    """
    if period_hours <= 0:
        raise ValueError("period must be positive")
    if not cycle_records:
        raise ValueError("no records to resample")
    keys = {(r.atm_id, r.lifecycle_id) for r in cycle_records}
    if len(keys) > 1:
        raise ValueError(f"records span {len(keys)} life cycles, expected one")
    col = {code: i for i, code in enumerate(code_universe)}
    start = min(r.timestamp for r in cycle_records)
    end = max(r.timestamp for r in cycle_records)
    span = (end - start).total_seconds()
    bucket_s = period_hours * 3600.0
    rows = max(1, math.ceil(span / bucket_s))
    counts = np.zeros((rows, len(code_universe)), dtype=int)
    for r in cycle_records:
        if r.event_code not in col:
            raise ValueError(f"event code {r.event_code!r} not in the code universe")
        k = min(int((r.timestamp - start).total_seconds() / bucket_s), rows - 1)
        counts[k, col[r.event_code]] += 1
    return counts


def build_features(counts: np.ndarray, code_universe: Sequence[str],
                   config: CodeGroupingConfig, *, atm_id: str = "",
                   cycle_index: int = 0, start_time: Optional[datetime] = None,
                   end_time: Optional[datetime] = None, period_hours: float = 24.0,
                   ended_in_failure: bool = True) -> LifeCycle:
    """Severity-ratio features from a count matrix, as a LifeCycle.

    Per recipe and bucket: sum of numerator-code counts over
    max(denominator count, 1). Codes not in the grouping config are
    discarded.
    """
    counts = np.asarray(counts)
    col = {code: i for i, code in enumerate(code_universe)}
    missing = set(config.codes) - set(col)
    if missing:
        raise ConfigurationError(
            f"count matrix lacks columns for codes {sorted(missing)[:5]}")
    feats = np.empty((counts.shape[0], len(config.features)))
    for j, recipe in enumerate(config.features):
        num_cols = [col[c] for c in config._columns(recipe.groups, recipe.numerator)]
        den_cols = [col[c] for c in config._columns(recipe.groups, (recipe.denominator,))]
        num = counts[:, num_cols].sum(axis=1)
        den = np.maximum(counts[:, den_cols].sum(axis=1), 1)
        feats[:, j] = num / den
    start = start_time or datetime.fromtimestamp(0, tz=timezone.utc)
    end = end_time or (start + timedelta(hours=period_hours * counts.shape[0]))
    return LifeCycle(atm_id=atm_id, cycle_index=cycle_index, start_time=start,
                     end_time=end, feature_names=config.feature_names,
                     samples=feats, period=period_hours,
                     ended_in_failure=ended_in_failure)


@dataclass(frozen=True)
class GroupStats:
    """Summary row for machines that produced a given number of cycles."""

    cycles_per_atm: int
    n_atms: int
    n_cycles: int
    min_days: float
    median_days: float
    max_days: float
    mean_daily_withdrawals: Optional[float]


@dataclass(frozen=True)
class DatasetStats:
    total_cycles: int
    total_atms: int
    groups: tuple[GroupStats, ...]


def dataset_stats(cycles: Sequence[LifeCycle],
                  withdrawal_daily: Optional[dict[tuple[str, int], float]] = None,
                  ) -> DatasetStats:
    """Duration and withdrawal statistics grouped by cycles-per-machine."""
    if not cycles:
        raise ValueError("no cycles")
    per_atm: dict[str, list[LifeCycle]] = defaultdict(list)
    for c in cycles:
        per_atm[c.atm_id].append(c)
    by_count: dict[int, list[LifeCycle]] = defaultdict(list)
    for atm, items in per_atm.items():
        by_count[len(items)].extend(items)
    groups = []
    for count in sorted(by_count):
        items = by_count[count]
        durations = [c.duration_days() for c in items]
        wd = None
        if withdrawal_daily is not None:
            vals = [withdrawal_daily[c.key] for c in items if c.key in withdrawal_daily]
            wd = sum(vals) / len(vals) if vals else None
        groups.append(GroupStats(
            cycles_per_atm=count,
            n_atms=len(items) // count,
            n_cycles=len(items),
            min_days=min(durations),
            median_days=float(median(durations)),
            max_days=max(durations),
            mean_daily_withdrawals=wd,
        ))
    return DatasetStats(total_cycles=len(cycles), total_atms=len(per_atm),
                        groups=tuple(groups))


@dataclass
class IngestResult:
    cycles: list[LifeCycle]
    withdrawal_daily: dict[tuple[str, int], float]
    n_codes_seen: int
    n_records: int
    n_removed_infected: int
    n_skipped_groups: int


def build_cycles(records: Sequence[EventRecord], config: CodeGroupingConfig,
                 period_hours: float = 24.0,
                 failures: Optional[Sequence[FailureMark]] = None,
                 ii_days: float = 1.0) -> IngestResult:
    """Full record-to-cycle pipeline.

    When no explicit failure marks are given, each life cycle's last event
    time is taken as the failure that ended it, so the infected interval
    trims the head of whatever data follows it on the same machine.
    """
    records = sorted(records, key=lambda r: (r.atm_id, r.lifecycle_id, r.timestamp))
    n_codes_seen = len({r.event_code for r in records})

    groups: dict[tuple[str, int], list[EventRecord]] = defaultdict(list)
    for r in records:
        groups[(r.atm_id, r.lifecycle_id)].append(r)

    if failures is None:
        # each cycle's last event approximates the failure that ended it; the
        # infected interval then trims only the machine's OTHER cycles, never
        # the end-of-cycle events of the cycle that produced the mark.
        derived = {key: recs[-1].timestamp for key, recs in groups.items()}
        kept = []
        for key, recs in sorted(groups.items()):
            others = [FailureMark(atm, t) for (atm, lc), t in derived.items()
                      if atm == key[0] and (atm, lc) != key]
            kept.extend(remove_infected(recs, others, ii_days))
    else:
        kept = remove_infected(records, failures, ii_days)
    n_removed = len(records) - len(kept)

    original_keys = set(groups)
    universe = set(config.relevant_codes)
    groups = defaultdict(list)
    for r in kept:
        if r.event_code in universe:
            groups[(r.atm_id, r.lifecycle_id)].append(r)
    skipped = len(original_keys - set(groups))

    cycles: list[LifeCycle] = []
    withdrawal_daily: dict[tuple[str, int], float] = {}
    wd_codes = [c for c, (g, _) in config.codes.items() if g == "withdrawal"]
    codes = config.relevant_codes
    col = {c: i for i, c in enumerate(codes)}
    for (atm, lifecycle_id), recs in sorted(groups.items()):
        counts = resample(recs, period_hours, codes)
        start = min(r.timestamp for r in recs)
        end = max(r.timestamp for r in recs)
        cycle = build_features(counts, codes, config, atm_id=atm,
                               cycle_index=lifecycle_id, start_time=start,
                               end_time=end if end > start else None,
                               period_hours=period_hours)
        cycles.append(cycle)
        if wd_codes:
            total_wd = counts[:, [col[c] for c in wd_codes]].sum()
            days = max(cycle.duration_days(), period_hours / 24.0)
            withdrawal_daily[cycle.key] = float(total_wd) / days
    return IngestResult(cycles=cycles, withdrawal_daily=withdrawal_daily,
                        n_codes_seen=n_codes_seen, n_records=len(records),
                        n_removed_infected=n_removed, n_skipped_groups=skipped)


# Canonical cycle files: <atm>_<cycle>.csv (header + one row per bucket) and a
# JSON sidecar with the cycle metadata.

def _slug(atm_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", atm_id)


def cycle_basename(cycle: LifeCycle) -> str:
    return f"{_slug(cycle.atm_id)}_{cycle.cycle_index:04d}"


def save_cycle(cycle: LifeCycle, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = out_dir / cycle_basename(cycle)
    csv_path = base.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cycle.feature_names)
        for row in cycle.samples:
            writer.writerow([repr(float(v)) for v in row])
    sidecar = {
        "atm_id": cycle.atm_id,
        "cycle_index": cycle.cycle_index,
        "start_time": cycle.start_time.isoformat(),
        "period_hours": cycle.period,
        "ended_in_failure": cycle.ended_in_failure,
    }
    base.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))
    return csv_path


def load_cycle(csv_path) -> LifeCycle:
    csv_path = Path(csv_path)
    sidecar = json.loads(csv_path.with_suffix(".json").read_text())
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        names = tuple(next(reader))
        samples = np.array([[float(v) for v in row] for row in reader])
    start = parse_timestamp(sidecar["start_time"])
    period = float(sidecar["period_hours"])
    end = start + timedelta(hours=period * samples.shape[0])
    return LifeCycle(atm_id=sidecar["atm_id"], cycle_index=int(sidecar["cycle_index"]),
                     start_time=start, end_time=end, feature_names=names,
                     samples=samples, period=period,
                     ended_in_failure=bool(sidecar["ended_in_failure"]))


def load_cycles(directory) -> list[LifeCycle]:
    directory = Path(directory)
    cycles = [load_cycle(p) for p in sorted(directory.glob("*.csv"))]
    if not cycles:
        raise FileNotFoundError(f"no cycle files under {directory}")
    return cycles
