"""Evaluation suite for synthesized profiles, plus the traditional baselines.

Every metric is an isolated primitive so individual definitions can be
re-pointed without touching the report plumbing. Distances are computed on
capacity-normalized values so sites of different sizes are comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.stats import wasserstein_distance

from .data import (
    HOURS_PER_DAY,
    HourlyProfile,
    SiteMeta,
    compute_duty_cycle,
    month_by_day,
    split_into_days,
)
from .synthesis import ForecastTarget, boundary_gaps

ACF_MAX_LAG = 168  # one week of hourly lags


@dataclass
class MetricsReport:
    """Scorecard comparing a generated profile set against history and target."""

    magnitude_error: float
    hourly_profile_rmse: float
    value_distribution_w1: np.ndarray  # 12 per-month distances
    acf_rmse: float
    ramp_w1: float
    duty_w1: float | None
    diversity_min_pairwise: float
    memorization_nn_distance: float
    boundary_violation_rate: float

    def to_dict(self) -> dict:
        return {
            "magnitude_error": self.magnitude_error,
            "hourly_profile_rmse": self.hourly_profile_rmse,
            "value_distribution_w1": [float(x) for x in self.value_distribution_w1],
            "acf_rmse": self.acf_rmse,
            "ramp_w1": self.ramp_w1,
            "duty_w1": self.duty_w1,
            "diversity_min_pairwise": self.diversity_min_pairwise,
            "memorization_nn_distance": self.memorization_nn_distance,
            "boundary_violation_rate": self.boundary_violation_rate,
        }

    @staticmethod
    def csv_header() -> list[str]:
        return (
            ["magnitude_error", "hourly_profile_rmse"]
            + [f"value_w1_m{m:02d}" for m in range(1, 13)]
            + [
                "acf_rmse",
                "ramp_w1",
                "duty_w1",
                "diversity_min_pairwise",
                "memorization_nn_distance",
                "boundary_violation_rate",
            ]
        )

    def csv_row(self) -> list[str]:
        cells = [self.magnitude_error, self.hourly_profile_rmse]
        cells += list(self.value_distribution_w1)
        cells += [
            self.acf_rmse,
            self.ramp_w1,
            self.duty_w1 if self.duty_w1 is not None else "",
            self.diversity_min_pairwise,
            self.memorization_nn_distance,
            self.boundary_violation_rate,
        ]
        return [f"{c:.6g}" if isinstance(c, float) else str(c) for c in cells]


# ---------------------------------------------------------------------------
# Primitives


def wasserstein1(sample_a: np.ndarray, sample_b: np.ndarray) -> float:
    """Wasserstein-1 distance between two empirical distributions.

    Equal-size samples reduce to the mean absolute difference of the sorted
    values; unequal sizes fall back to the merged-quantile integral.
    """
    a = np.asarray(sample_a, dtype=np.float64).reshape(-1)
    b = np.asarray(sample_b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein1 requires non-empty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a) - np.sort(b))))
    return float(wasserstein_distance(a, b))


def acf(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelation for lags 0..max_lag (acf[0] == 1)."""
    x = np.asarray(series, dtype=np.float64).reshape(-1)
    if x.size <= max_lag:
        raise ValueError(f"series length {x.size} must exceed max_lag {max_lag}")
    if np.all(x == x[0]):
        raise ValueError("constant series has no autocorrelation")
    centered = x - x.mean()
    denom = float(centered @ centered)
    if denom <= 0:
        raise ValueError("constant series has no autocorrelation")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(centered[:-k] @ centered[k:]) / denom
    return out


def diversity(days: np.ndarray) -> tuple[float, int]:
    """(minimum pairwise L2 distance, number of exactly equal pairs) over days."""
    days = np.asarray(days, dtype=np.float64)
    if days.ndim != 2 or days.shape[0] < 2:
        raise ValueError("diversity requires at least 2 days")
    distances = pdist(days)
    _, counts = np.unique(days, axis=0, return_counts=True)
    duplicate_pairs = int((counts * (counts - 1) // 2).sum())
    return float(distances.min()), duplicate_pairs


def memorization_distance(generated_days: np.ndarray, training_days: np.ndarray) -> float:
    """Mean L2 distance from each generated day to its nearest training day."""
    gen = np.atleast_2d(np.asarray(generated_days, dtype=np.float64))
    train = np.atleast_2d(np.asarray(training_days, dtype=np.float64))
    if gen.size == 0 or train.size == 0:
        raise ValueError("memorization_distance requires non-empty inputs")
    nearest = np.empty(gen.shape[0])
    chunk = 1024
    for start in range(0, gen.shape[0], chunk):
        block = gen[start:start + chunk]
        nearest[start:start + block.shape[0]] = cdist(block, train).min(axis=1)
    return float(nearest.mean())


# ---------------------------------------------------------------------------
# Baselines


def _calendar_days(profile: HourlyProfile) -> dict[tuple[int, int], np.ndarray]:
    """Map (month, day-of-month) -> 24 hourly values for one historical year."""
    days = split_into_days(profile)
    months = month_by_day(profile.year)
    out: dict[tuple[int, int], np.ndarray] = {}
    day_of_month = 0
    prev_month = 0
    for d in range(days.shape[0]):
        month = int(months[d])
        day_of_month = day_of_month + 1 if month == prev_month else 1
        prev_month = month
        out[(month, day_of_month)] = days[d]
    return out


def _target_calendar(year: int) -> list[tuple[int, int]]:
    months = month_by_day(year)
    cal: list[tuple[int, int]] = []
    day_of_month = 0
    prev_month = 0
    for m in months:
        month = int(m)
        day_of_month = day_of_month + 1 if month == prev_month else 1
        prev_month = month
        cal.append((month, day_of_month))
    return cal


def average_profile_baseline(
    history: Sequence[HourlyProfile],
    target: ForecastTarget,
) -> HourlyProfile:
    """Hour-by-hour mean of the historical years, rescaled to the target energy.

    Feb 29 in a leap target year borrows Feb 28 from non-leap history years.
    Deterministic by construction, so repeated target years come out identical.
    """
    if not history:
        raise ValueError("average_profile_baseline requires at least one historical year")
    calendars = [_calendar_days(p) for p in history]
    target_days = _target_calendar(target.target_year)
    values = np.empty((len(target_days), HOURS_PER_DAY))
    for i, (month, day) in enumerate(target_days):
        stack = [
            cal.get((month, day), cal.get((2, 28)) if (month, day) == (2, 29) else None)
            for cal in calendars
        ]
        stack = [s for s in stack if s is not None]
        if not stack:
            raise ValueError(f"no historical data for calendar day {month:02d}-{day:02d}")
        values[i] = np.mean(stack, axis=0)
    flat = values.reshape(-1)
    total = flat.sum()
    if total <= 0:
        raise ValueError("historical average has zero energy; cannot rescale")
    flat = flat * (target.annual_energy_mwh / total)
    return HourlyProfile(
        site_id=target.site_id,
        generation_type=history[0].generation_type,
        year=target.target_year,
        values=flat,
    )


def random_sampling_baseline(
    history: Sequence[HourlyProfile],
    target: ForecastTarget,
    seed: int = 0,
) -> HourlyProfile:
    """Concatenate uniformly sampled same-month historical days, then rescale.

    Deliberately applies no continuity correction at day boundaries.
    """
    if not history:
        raise ValueError("random_sampling_baseline requires at least one historical year")
    by_month: dict[int, list[np.ndarray]] = {m: [] for m in range(1, 13)}
    for profile in history:
        days = split_into_days(profile)
        months = month_by_day(profile.year)
        for d in range(days.shape[0]):
            by_month[int(months[d])].append(days[d])
    rng = np.random.default_rng(seed)
    months = month_by_day(target.target_year)
    values = np.empty((months.size, HOURS_PER_DAY))
    for i, m in enumerate(months):
        pool = by_month[int(m)]
        if not pool:
            raise ValueError(f"no historical days for month {int(m)}")
        values[i] = pool[int(rng.integers(len(pool)))]
    flat = values.reshape(-1)
    total = flat.sum()
    if total <= 0:
        raise ValueError("sampled profile has zero energy; cannot rescale")
    flat = flat * (target.annual_energy_mwh / total)
    return HourlyProfile(
        site_id=target.site_id,
        generation_type=history[0].generation_type,
        year=target.target_year,
        values=flat,
    )


# ---------------------------------------------------------------------------
# Full evaluation


def _normalized_days(profiles: Sequence[HourlyProfile], metas: Mapping[str, SiteMeta]) -> np.ndarray:
    blocks = []
    for p in profiles:
        capacity = metas[p.site_id].installed_capacity_mw
        blocks.append(split_into_days(p) / capacity)
    return np.vstack(blocks)


def _monthly_values(profiles: Sequence[HourlyProfile], metas: Mapping[str, SiteMeta]) -> list[np.ndarray]:
    per_month: list[list[np.ndarray]] = [[] for _ in range(12)]
    for p in profiles:
        capacity = metas[p.site_id].installed_capacity_mw
        values = p.values / capacity
        months = np.repeat(month_by_day(p.year), HOURS_PER_DAY)
        for m in range(12):
            sel = values[months == m + 1]
            if sel.size:
                per_month[m].append(sel)
    return [np.concatenate(v) if v else np.empty(0) for v in per_month]


def _mean_acf(profiles: Sequence[HourlyProfile], max_lag: int) -> np.ndarray:
    return np.mean([acf(p.values, max_lag) for p in profiles], axis=0)


def evaluate(
    generated: Sequence[HourlyProfile],
    history: Sequence[HourlyProfile],
    target: ForecastTarget | Sequence[ForecastTarget],
    metas: Mapping[str, SiteMeta],
    duty_threshold: float = 0.01,
    ramp_percentile: float = 99.5,
    max_lag: int = ACF_MAX_LAG,
) -> MetricsReport:
    """Populate the full scorecard for a generated set against history.

    ``target`` may be a single forecast target or one per generated year;
    with several, each generated profile is matched to its target by
    (site_id, year) for the magnitude check. All profiles must have site
    metadata in ``metas``; values are normalized by each site's capacity
    before any distance is computed.
    """
    if not generated or not history:
        raise ValueError("evaluate requires non-empty generated and historical sets")
    labels = {p.generation_type.label for p in generated} | {p.generation_type.label for p in history}
    if len(labels) != 1:
        raise ValueError(f"generated and history mix generation types: {sorted(labels)}")

    targets = [target] if isinstance(target, ForecastTarget) else list(target)
    if len(targets) == 1:
        energy_targets = {(p.site_id, p.year): targets[0].annual_energy_mwh for p in generated}
    else:
        energy_targets = {(t.site_id, t.target_year): t.annual_energy_mwh for t in targets}
        missing = [(p.site_id, p.year) for p in generated if (p.site_id, p.year) not in energy_targets]
        if missing:
            raise ValueError(f"no forecast target for generated years: {missing}")

    gen_days = _normalized_days(generated, metas)
    hist_days = _normalized_days(history, metas)

    magnitude_error = float(
        np.mean(
            [
                abs(p.annual_energy_mwh() / energy_targets[(p.site_id, p.year)] - 1.0)
                for p in generated
            ]
        )
    )
    hourly_rmse = float(
        np.sqrt(np.mean((gen_days.mean(axis=0) - hist_days.mean(axis=0)) ** 2))
    )

    gen_monthly = _monthly_values(generated, metas)
    hist_monthly = _monthly_values(history, metas)
    value_w1 = np.empty(12)
    for m in range(12):
        if gen_monthly[m].size == 0 or hist_monthly[m].size == 0:
            raise ValueError(f"month {m + 1} missing from generated or historical data")
        value_w1[m] = wasserstein1(gen_monthly[m], hist_monthly[m])

    acf_rmse = float(
        np.sqrt(np.mean((_mean_acf(generated, max_lag)[1:] - _mean_acf(history, max_lag)[1:]) ** 2))
    )

    gen_ramps = np.concatenate([np.abs(np.diff(p.values / metas[p.site_id].installed_capacity_mw)) for p in generated])
    hist_ramps = np.concatenate([np.abs(np.diff(p.values / metas[p.site_id].installed_capacity_mw)) for p in history])
    ramp_w1 = wasserstein1(gen_ramps, hist_ramps)

    duty_w1 = None
    if generated[0].generation_type.intermittent_dispatch:
        gen_duties = np.apply_along_axis(compute_duty_cycle, 1, gen_days, duty_threshold)
        hist_duties = np.apply_along_axis(compute_duty_cycle, 1, hist_days, duty_threshold)
        duty_w1 = wasserstein1(gen_duties, hist_duties)

    min_pairwise, _ = diversity(gen_days) if gen_days.shape[0] >= 2 else (0.0, 0)
    memo = memorization_distance(gen_days, hist_days)

    limit = float(np.percentile(hist_ramps, ramp_percentile))
    gaps = np.concatenate(
        [boundary_gaps(p.values / metas[p.site_id].installed_capacity_mw) for p in generated]
    )
    violation_rate = float(np.mean(gaps > limit)) if gaps.size else 0.0

    return MetricsReport(
        magnitude_error=magnitude_error,
        hourly_profile_rmse=hourly_rmse,
        value_distribution_w1=value_w1,
        acf_rmse=acf_rmse,
        ramp_w1=ramp_w1,
        duty_w1=duty_w1,
        diversity_min_pairwise=min_pairwise,
        memorization_nn_distance=memo,
        boundary_violation_rate=violation_rate,
    )
