"""Historical hourly generation data: ingestion, calendars, daily slicing.

Hourly site data arrives as a CSV with one row per site-hour plus a site
metadata table. Ingestion validates completeness and capacity bounds; the
validated years are then sliced into capacity-normalized 24-hour shapes
carrying the condition features (type, month, previous day's final value,
duty cycle) that the training loop consumes.

All functions here are pure; nothing mutates its inputs.
"""

from __future__ import annotations

import calendar
import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

HOURS_PER_DAY = 24

# Real meters occasionally report slightly above nameplate; anything beyond
# this tolerance is treated as a data error rather than clamped.
CAPACITY_CLAMP_TOLERANCE = 1.01

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"


class DataError(Exception):
    """Raised for malformed or incomplete input data."""


@dataclass(frozen=True)
class GenerationType:
    """One entry of the closed set of generation types in a dataset.

    ``index`` is the type's position in its registry and drives one-hot
    encoding, so it is only meaningful relative to that registry.
    """

    label: str
    index: int
    intermittent_dispatch: bool = False


@dataclass(frozen=True)
class SiteMeta:
    site_id: str
    generation_type: GenerationType
    installed_capacity_mw: float

    def __post_init__(self) -> None:
        if not self.installed_capacity_mw > 0:
            raise DataError(
                f"site {self.site_id!r}: installed capacity must be positive, "
                f"got {self.installed_capacity_mw}"
            )


@dataclass
class HourlyProfile:
    """One calendar year of hourly mean power for one site."""

    site_id: str
    generation_type: GenerationType
    year: int
    values: np.ndarray  # MW, length 8760 (8784 in leap years)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = hours_in_year(self.year)
        if self.values.shape != (expected,):
            raise DataError(
                f"profile {self.site_id}/{self.year}: expected {expected} "
                f"hourly values, got shape {self.values.shape}"
            )
        if not np.isfinite(self.values).all():
            raise DataError(f"profile {self.site_id}/{self.year}: non-finite values")
        if (self.values < 0).any():
            raise DataError(f"profile {self.site_id}/{self.year}: negative power values")

    @property
    def n_days(self) -> int:
        return self.values.size // HOURS_PER_DAY

    def annual_energy_mwh(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class ConditionVector:
    """Condition features for one training day.

    ``starting_point`` is the previous day's final-hour normalized power;
    it ties consecutive generated days together.
    """

    type_onehot: np.ndarray
    month_onehot: np.ndarray
    starting_point: float


@dataclass
class TrainingSample:
    condition: ConditionVector
    target_shape: np.ndarray  # 24 values in [0, 1]
    target_duty: float | None = None  # present only for intermittent types


def hours_in_year(year: int) -> int:
    return 8784 if calendar.isleap(year) else 8760


def month_by_day(year: int) -> np.ndarray:
    """Calendar month (1..12) of each day of ``year``, Feb 29 counted as month 2."""
    months = []
    for month in range(1, 13):
        months.extend([month] * calendar.monthrange(year, month)[1])
    return np.asarray(months, dtype=np.int64)


def hours_by_month(year: int) -> np.ndarray:
    """Hour count of each calendar month of ``year`` (12 entries)."""
    counts = np.bincount(month_by_day(year), minlength=13)[1:]
    return counts * HOURS_PER_DAY


def split_into_days(profile: HourlyProfile) -> np.ndarray:
    """Reshape a yearly profile into (n_days, 24); day 0 holds hours 0..23."""
    return profile.values.reshape(profile.n_days, HOURS_PER_DAY)


def normalize_shape(day_values: np.ndarray, capacity_mw: float) -> np.ndarray:
    """Divide one day of power values by installed capacity.

    Raises ``DataError`` for non-positive capacity or values outside
    [0, capacity] (ingestion guarantees the latter never happens downstream).
    """
    if not capacity_mw > 0:
        raise DataError(f"capacity must be positive, got {capacity_mw}")
    day = np.asarray(day_values, dtype=np.float64)
    if (day < 0).any() or (day > capacity_mw * (1 + 1e-12)).any():
        raise DataError("day values outside [0, capacity]")
    return np.minimum(day / capacity_mw, 1.0)


def compute_duty_cycle(shape: np.ndarray, threshold: float = 0.01) -> float:
    """Fraction of the day's hours producing above ``threshold`` (normalized)."""
    if not 0 <= threshold < 1:
        raise ValueError(f"threshold must be in [0, 1), got {threshold}")
    shape = np.asarray(shape, dtype=np.float64)
    return float(np.count_nonzero(shape > threshold)) / shape.size


def build_type_registry(rows: Iterable[tuple[str, bool]]) -> list[GenerationType]:
    """Build the ordered type registry from (label, intermittent) pairs.

    Labels are sorted so indices are stable regardless of input order. A label
    appearing with conflicting intermittent flags is a data error.
    """
    flags: dict[str, bool] = {}
    for label, intermittent in rows:
        if label in flags and flags[label] != intermittent:
            raise DataError(f"type {label!r} has conflicting intermittent flags")
        flags[label] = intermittent
    return [
        GenerationType(label=label, index=i, intermittent_dispatch=flags[label])
        for i, label in enumerate(sorted(flags))
    ]


def registry_for_labels(types: Sequence[GenerationType], labels: Sequence[str]) -> list[GenerationType]:
    """Re-index a registry subset (e.g. a single type for single-type training)."""
    by_label = {t.label: t for t in types}
    missing = [lb for lb in labels if lb not in by_label]
    if missing:
        raise DataError(f"unknown type label(s): {', '.join(missing)}")
    return [
        GenerationType(label=lb, index=i, intermittent_dispatch=by_label[lb].intermittent_dispatch)
        for i, lb in enumerate(sorted(set(labels)))
    ]


def _onehot(index: int, size: int) -> np.ndarray:
    v = np.zeros(size, dtype=np.float64)
    v[index] = 1.0
    return v


def build_training_set(
    profiles: Sequence[HourlyProfile],
    metas: Mapping[str, SiteMeta],
    types: Sequence[GenerationType] | None = None,
    duty_threshold: float = 0.01,
) -> list[TrainingSample]:
    """Slice yearly profiles into conditioned daily training samples.

    One sample per calendar day, ordered by (site, year, day). The starting
    point of day d is day d-1's final-hour normalized value; the first day of
    each (site, year) seeds itself with its own hour-0 value. Duty cycles are
    attached only for intermittent-dispatch types.
    """
    if not profiles:
        raise DataError("no profiles to build a training set from")
    if types is None:
        types = build_type_registry(
            (m.generation_type.label, m.generation_type.intermittent_dispatch)
            for m in metas.values()
        )
    type_by_label = {t.label: t for t in types}
    n_types = len(types)

    samples: list[TrainingSample] = []
    for profile in sorted(profiles, key=lambda p: (p.site_id, p.year)):
        meta = metas.get(profile.site_id)
        if meta is None:
            raise DataError(f"no metadata for site {profile.site_id!r}")
        gtype = type_by_label.get(profile.generation_type.label)
        if gtype is None:
            raise DataError(
                f"profile type {profile.generation_type.label!r} not in registry"
            )
        days = split_into_days(profile) / meta.installed_capacity_mw
        np.minimum(days, 1.0, out=days)  # capacity clamp guards exact-1 rounding
        months = month_by_day(profile.year)
        type_oh = _onehot(gtype.index, n_types)
        for d in range(days.shape[0]):
            starting_point = days[d - 1, -1] if d > 0 else days[0, 0]
            condition = ConditionVector(
                type_onehot=type_oh,
                month_onehot=_onehot(int(months[d]) - 1, 12),
                starting_point=float(starting_point),
            )
            duty = None
            if gtype.intermittent_dispatch:
                duty = compute_duty_cycle(days[d], duty_threshold)
            samples.append(
                TrainingSample(condition=condition, target_shape=days[d].copy(), target_duty=duty)
            )
    return samples


# ---------------------------------------------------------------------------
# CSV ingestion


@dataclass
class _SiteAccumulator:
    meta: SiteMeta
    by_year: dict[int, dict[int, float]] = field(default_factory=dict)


def read_meta_csv(meta_path: str | Path, allowed_types: Sequence[str] | None = None) -> dict[str, SiteMeta]:
    """Read the site metadata CSV (``site_id,type,capacity_mw,intermittent``)."""
    meta_path = Path(meta_path)
    if not meta_path.exists():
        raise DataError(f"meta file not found: {meta_path}")
    rows: list[tuple[str, str, float, bool]] = []
    with open(meta_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"site_id", "type", "capacity_mw", "intermittent"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(
                f"meta file {meta_path}: header must contain {sorted(required)}"
            )
        for lineno, row in enumerate(reader, start=2):
            site_id = row["site_id"].strip()
            label = row["type"].strip()
            if allowed_types is not None and label not in allowed_types:
                raise DataError(
                    f"meta file row {lineno}: unknown type label {label!r}"
                )
            try:
                capacity = float(row["capacity_mw"])
            except ValueError:
                raise DataError(f"meta file row {lineno}: bad capacity {row['capacity_mw']!r}")
            flag = row["intermittent"].strip()
            if flag not in ("0", "1"):
                raise DataError(
                    f"meta file row {lineno}: intermittent must be 0 or 1, got {flag!r}"
                )
            rows.append((site_id, label, capacity, flag == "1"))

    if not rows:
        raise DataError(f"meta file {meta_path}: no sites")
    seen: set[str] = set()
    for site_id, *_ in rows:
        if site_id in seen:
            raise DataError(f"duplicate site_id {site_id!r} in meta file")
        seen.add(site_id)

    registry = build_type_registry((label, inter) for _, label, _, inter in rows)
    by_label = {t.label: t for t in registry}
    return {
        site_id: SiteMeta(site_id=site_id, generation_type=by_label[label], installed_capacity_mw=capacity)
        for site_id, label, capacity, _ in rows
    }


def ingest_hourly_csv(
    data_path: str | Path,
    meta_path: str | Path,
    allowed_types: Sequence[str] | None = None,
) -> tuple[list[HourlyProfile], dict[str, SiteMeta]]:
    """Ingest and validate hourly data, returning complete per-(site, year) profiles.

    Every (site, year) present in the data must cover the full hour grid of
    that year. Values up to 1% above capacity are clamped to capacity; larger
    excursions, negative power, gaps and duplicates are errors.
    """
    data_path = Path(data_path)
    if not data_path.exists():
        raise DataError(f"data file not found: {data_path}")
    metas = read_meta_csv(meta_path, allowed_types)
    sites: dict[str, _SiteAccumulator] = {
        site_id: _SiteAccumulator(meta=meta) for site_id, meta in metas.items()
    }

    with open(data_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"timestamp", "site_id", "power_mw"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"data file {data_path}: header must contain {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            site_id = row["site_id"].strip()
            acc = sites.get(site_id)
            if acc is None:
                raise DataError(f"data row {lineno}: unknown site {site_id!r}")
            ts_raw = row["timestamp"].strip()
            try:
                ts = datetime.strptime(ts_raw, TIMESTAMP_FORMAT)
            except ValueError:
                raise DataError(f"data row {lineno}: bad timestamp {ts_raw!r}")
            if ts.minute != 0:
                raise DataError(f"data row {lineno}: timestamp {ts_raw!r} is not on the hour")
            try:
                power = float(row["power_mw"])
            except ValueError:
                raise DataError(f"data row {lineno}: bad power value {row['power_mw']!r}")
            if not np.isfinite(power):
                raise DataError(f"data row {lineno}: non-finite power value")
            if power < 0:
                raise DataError(f"data row {lineno}: negative power {power}")
            capacity = acc.meta.installed_capacity_mw
            if power > capacity * CAPACITY_CLAMP_TOLERANCE:
                raise DataError(
                    f"data row {lineno}: power {power} exceeds capacity {capacity} "
                    f"by more than {CAPACITY_CLAMP_TOLERANCE - 1:.0%}"
                )
            power = min(power, capacity)
            hour = int((ts - datetime(ts.year, 1, 1)).total_seconds() // 3600)
            year_hours = acc.by_year.setdefault(ts.year, {})
            if hour in year_hours:
                raise DataError(f"data row {lineno}: duplicate timestamp {ts_raw} for {site_id}")
            year_hours[hour] = power

    profiles: list[HourlyProfile] = []
    for site_id in sorted(sites):
        acc = sites[site_id]
        for year in sorted(acc.by_year):
            hours = acc.by_year[year]
            expected = hours_in_year(year)
            if len(hours) != expected:
                missing = next(h for h in range(expected) if h not in hours)
                stamp = datetime(year, 1, 1) + timedelta(hours=missing)
                raise DataError(
                    f"site {site_id}, year {year}: missing hour "
                    f"{stamp.strftime(TIMESTAMP_FORMAT)} "
                    f"({len(hours)} of {expected} hours present)"
                )
            values = np.array([hours[h] for h in range(expected)], dtype=np.float64)
            profiles.append(
                HourlyProfile(
                    site_id=site_id,
                    generation_type=acc.meta.generation_type,
                    year=year,
                    values=values,
                )
            )
    if not profiles:
        raise DataError(f"data file {data_path}: no rows")
    return profiles, metas


def profile_timestamps(year: int) -> list[str]:
    """Hourly timestamp strings for one calendar year."""
    start = datetime(year, 1, 1)
    return [
        (start + timedelta(hours=h)).strftime(TIMESTAMP_FORMAT)
        for h in range(hours_in_year(year))
    ]


def write_profile_csv(profile: HourlyProfile, path: str | Path, include_site: bool = False) -> None:
    """Write one profile as CSV, power rounded to 3 decimals.

    ``include_site`` switches to the ingestion schema
    (``timestamp,site_id,power_mw``) so the file can be re-ingested.
    """
    path = Path(path)
    stamps = profile_timestamps(profile.year)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if include_site:
            writer.writerow(["timestamp", "site_id", "power_mw"])
            for stamp, value in zip(stamps, profile.values):
                writer.writerow([stamp, profile.site_id, f"{value:.3f}"])
        else:
            writer.writerow(["timestamp", "power_mw"])
            for stamp, value in zip(stamps, profile.values):
                writer.writerow([stamp, f"{value:.3f}"])
