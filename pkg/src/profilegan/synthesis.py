"""Multi-level yearly profile synthesis from a trained GAN.

A year is assembled at two time levels: a monthly magnitude envelope derived
from history (or explicit month shares), and GAN-generated daily shapes
chained day by day. Each day is conditioned on the previous day's final
normalized value and resampled until the day boundary respects the
historical ramp distribution; intermittent-dispatch types additionally pass
through a per-day duty-cycle mask. A final uniform rescale (with capacity
clipping) pins the year's energy to the forecast target exactly.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .data import (
    HOURS_PER_DAY,
    HourlyProfile,
    SiteMeta,
    hours_by_month,
    hours_in_year,
    month_by_day,
)
from .gan import TrainedGanModel

ENERGY_RTOL = 1e-3  # relative tolerance on annual energy after clipping
MAX_RESCALE_ITERATIONS = 10
_MIN_FACTOR = 1e-9  # envelope factors must stay positive


class SynthesisError(Exception):
    """Raised for infeasible targets or synthesis that cannot converge."""


@dataclass(frozen=True)
class ForecastTarget:
    """Long-term forecast magnitude for one site and year."""

    site_id: str
    generation_type: str
    target_year: int
    annual_energy_mwh: float
    monthly_shares: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.annual_energy_mwh > 0:
            raise ValueError("annual_energy_mwh must be positive")
        if self.monthly_shares is not None:
            shares = np.asarray(self.monthly_shares, dtype=np.float64)
            if shares.shape != (12,):
                raise ValueError("monthly_shares must hold 12 values")
            if (shares < 0).any():
                raise ValueError("monthly_shares must be non-negative")
            if abs(shares.sum() - 1.0) > 1e-9:
                raise ValueError(f"monthly_shares must sum to 1, got {shares.sum()!r}")
            object.__setattr__(self, "monthly_shares", shares)


@dataclass
class MonthlyEnvelope:
    factors: np.ndarray  # 12 positive scale factors, January first

    def __post_init__(self) -> None:
        self.factors = np.asarray(self.factors, dtype=np.float64)
        if self.factors.shape != (12,):
            raise ValueError("envelope needs 12 factors")
        if not (self.factors > 0).all():
            raise ValueError("envelope factors must be positive")


@dataclass
class SynthesisConfig:
    ramp_percentile: float = 99.5  # day-boundary limit, percentile of historical ramps
    max_resamples: int = 20
    blend_weight: float = 0.5  # weight of prev day's value in the fallback blend
    duty_threshold: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if not 50 < self.ramp_percentile <= 100:
            raise ValueError("ramp_percentile must be in (50, 100]")
        if self.max_resamples < 1:
            raise ValueError("max_resamples must be >= 1")
        if not 0 <= self.blend_weight <= 1:
            raise ValueError("blend_weight must be in [0, 1]")
        if not 0 <= self.duty_threshold < 1:
            raise ValueError("duty_threshold must be in [0, 1)")


@dataclass
class YearTrace:
    """Per-day synthesis diagnostics, mostly for tests and tuning."""

    duties: list[float | None] = field(default_factory=list)
    resamples: list[int] = field(default_factory=list)
    blended: list[bool] = field(default_factory=list)
    starting_points: list[float] = field(default_factory=list)
    ramp_limit: float = 0.0
    envelope: MonthlyEnvelope | None = None
    rescale_iterations: int = 0


def _profiles_of_type(history: Sequence[HourlyProfile], type_label: str) -> list[HourlyProfile]:
    return [p for p in history if p.generation_type.label == type_label]


def _normalized(profile: HourlyProfile, metas: Mapping[str, SiteMeta]) -> np.ndarray:
    meta = metas.get(profile.site_id)
    if meta is None:
        raise SynthesisError(f"no metadata for historical site {profile.site_id!r}")
    return np.minimum(profile.values / meta.installed_capacity_mw, 1.0)


def historical_ramp_limit(
    history: Sequence[HourlyProfile],
    metas: Mapping[str, SiteMeta],
    percentile: float = 99.5,
) -> float:
    """Percentile of pooled |hour-to-hour change| in normalized history."""
    if not history:
        raise SynthesisError("no history to derive a ramp limit from")
    ramps = np.concatenate([np.abs(np.diff(_normalized(p, metas))) for p in history])
    return float(np.percentile(ramps, percentile))


def jan1_starting_values(history: Sequence[HourlyProfile], metas: Mapping[str, SiteMeta]) -> np.ndarray:
    """Historical normalized hour-0 values of January 1, one per (site, year)."""
    if not history:
        raise SynthesisError("no history to derive starting values from")
    return np.asarray([_normalized(p, metas)[0] for p in history])


def monthly_level_weights(history: Sequence[HourlyProfile], metas: Mapping[str, SiteMeta]) -> np.ndarray:
    """Historical month-mean normalized power relative to the overall mean.

    This is the seasonal magnitude structure a month-conditioned day model
    learns on its own; the synthesis step divides it back out of the envelope
    so seasonality is never applied twice.
    """
    if not history:
        raise SynthesisError("no history to derive monthly levels from")
    sums = np.zeros(12)
    counts = np.zeros(12)
    for profile in history:
        values = _normalized(profile, metas)
        months = np.repeat(month_by_day(profile.year), HOURS_PER_DAY)
        for m in range(12):
            sel = values[months == m + 1]
            sums[m] += sel.sum()
            counts[m] += sel.size
    if not (counts > 0).all():
        raise SynthesisError("history does not cover all 12 months")
    month_means = sums / counts
    overall = sums.sum() / counts.sum()
    if overall <= 0:
        raise SynthesisError("historical output is identically zero")
    return np.maximum(month_means / overall, _MIN_FACTOR)


def build_monthly_envelope(
    history: Sequence[HourlyProfile],
    metas: Mapping[str, SiteMeta],
    target: ForecastTarget,
) -> MonthlyEnvelope:
    """Derive the 12 per-month scale factors for a target year.

    Without explicit shares the factors follow the historical month-mean
    normalized power; with shares they follow the shares as relative month
    weights. Either way the factors are scaled so a year generated at the
    historical mean level meets the target energy; the synthesis rescale
    step then enforces it exactly.
    """
    meta = metas.get(target.site_id)
    if meta is None:
        raise SynthesisError(f"no metadata for target site {target.site_id!r}")
    relevant = _profiles_of_type(history, target.generation_type)
    if not relevant:
        raise SynthesisError(f"no history for type {target.generation_type!r}")

    month_hours = hours_by_month(target.target_year).astype(np.float64)
    month_values: list[list[np.ndarray]] = [[] for _ in range(12)]
    pooled: list[np.ndarray] = []
    for profile in relevant:
        values = _normalized(profile, metas)
        months = np.repeat(month_by_day(profile.year), HOURS_PER_DAY)
        pooled.append(values)
        for m in range(12):
            sel = values[months == m + 1]
            if sel.size:
                month_values[m].append(sel)
    overall_mean = float(np.concatenate(pooled).mean())
    if overall_mean <= 0:
        raise SynthesisError("historical output is identically zero")
    reference_energy = meta.installed_capacity_mw * float(month_hours.sum()) * overall_mean
    magnitude_ratio = target.annual_energy_mwh / reference_energy

    if target.monthly_shares is not None:
        weights = np.asarray(target.monthly_shares, dtype=np.float64)
    else:
        missing = [m + 1 for m in range(12) if not month_values[m]]
        if missing:
            raise SynthesisError(
                f"history for type {target.generation_type!r} lacks months {missing} "
                "and no monthly shares were provided"
            )
        weights = np.asarray([np.concatenate(month_values[m]).mean() for m in range(12)])
    weighted_mean = float((weights * month_hours).sum() / month_hours.sum())
    if weighted_mean <= 0:
        raise SynthesisError("monthly weights are identically zero")
    factors = weights / weighted_mean * magnitude_ratio
    return MonthlyEnvelope(factors=np.maximum(factors, _MIN_FACTOR))


def apply_duty_cycle(shape: np.ndarray, duty: float) -> np.ndarray:
    """Keep the round(24*duty) largest hours of the day, zero the rest.

    Ties keep the earlier hour. The kept hours retain their values, so the
    learned peak structure survives the masking.
    """
    if not 0 <= duty <= 1:
        raise ValueError(f"duty must be in [0, 1], got {duty}")
    shape = np.asarray(shape, dtype=np.float64)
    n_keep = int(np.floor(shape.size * duty + 0.5))
    if n_keep >= shape.size:
        return shape.copy()
    out = np.zeros_like(shape)
    if n_keep > 0:
        order = np.argsort(-shape, kind="stable")
        keep = order[:n_keep]
        out[keep] = shape[keep]
    return out


def chain_day(
    model: TrainedGanModel,
    type_label: str,
    month: int,
    prev_last_value: float,
    ramp_limit: float,
    config: SynthesisConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float | None, int, bool]:
    """Sample one day conditioned on the previous day's final value.

    Resamples up to ``config.max_resamples`` times until the day's first hour
    lands within ``ramp_limit`` of ``prev_last_value``; otherwise the closest
    attempt is kept and its first hour blended toward continuity.

    Returns (shape, duty, attempts, blended).
    """
    if not 0.0 <= prev_last_value <= 1.0:
        raise ValueError(f"prev_last_value must be in [0, 1], got {prev_last_value}")
    best_shape: np.ndarray | None = None
    best_duty: float | None = None
    best_gap = np.inf
    for attempt in range(1, config.max_resamples + 1):
        z = rng.standard_normal(model.config.latent_dim)
        shape, duty = model.sample(model.condition(type_label, month, prev_last_value), z)
        gap = abs(float(shape[0]) - prev_last_value)
        if gap <= ramp_limit:
            return shape, duty, attempt, False
        if gap < best_gap:
            best_shape, best_duty, best_gap = shape, duty, gap
    blended = best_shape.copy()
    blended[0] = config.blend_weight * prev_last_value + (1.0 - config.blend_weight) * blended[0]
    return blended, best_duty, config.max_resamples, True


def _target_rng(config: SynthesisConfig, target: ForecastTarget) -> np.random.Generator:
    # Independent, reproducible stream per (site, year) under one master seed.
    site_key = zlib.crc32(target.site_id.encode("utf-8"))
    return np.random.default_rng([config.seed, site_key, target.target_year])


def generate_year_traced(
    model: TrainedGanModel,
    target: ForecastTarget,
    history: Sequence[HourlyProfile],
    metas: Mapping[str, SiteMeta],
    config: SynthesisConfig,
    rng: np.random.Generator | None = None,
) -> tuple[HourlyProfile, YearTrace]:
    """As ``generate_year`` but also returns per-day diagnostics."""
    meta = metas.get(target.site_id)
    if meta is None:
        raise SynthesisError(f"no metadata for target site {target.site_id!r}")
    if meta.generation_type.label != target.generation_type:
        raise SynthesisError(
            f"target type {target.generation_type!r} does not match site "
            f"{target.site_id!r} type {meta.generation_type.label!r}"
        )
    gtype = model.type_by_label(target.generation_type)  # KeyError if unknown
    capacity = meta.installed_capacity_mw
    n_hours = hours_in_year(target.target_year)
    if target.annual_energy_mwh > capacity * n_hours:
        raise SynthesisError(
            f"target energy {target.annual_energy_mwh} MWh exceeds "
            f"capacity*hours = {capacity * n_hours} MWh"
        )
    relevant = _profiles_of_type(history, target.generation_type)
    if not relevant:
        raise SynthesisError(f"no history for type {target.generation_type!r}")

    trace = YearTrace()
    trace.envelope = build_monthly_envelope(relevant, metas, target)
    trace.ramp_limit = historical_ramp_limit(relevant, metas, config.ramp_percentile)
    jan1_pool = jan1_starting_values(relevant, metas)
    if rng is None:
        rng = _target_rng(config, target)

    # A month-conditioned day model already reproduces the historical monthly
    # magnitude structure, so only the residual of the envelope over that
    # structure is applied; otherwise seasonality would be squared.
    month_scale = trace.envelope.factors.copy()
    if model.config.condition_on_month:
        month_scale /= monthly_level_weights(relevant, metas)

    months = month_by_day(target.target_year)
    starting_point = float(rng.choice(jan1_pool))
    days_mw = np.empty((months.size, HOURS_PER_DAY))
    for d in range(months.size):
        trace.starting_points.append(starting_point)
        shape, duty, attempts, blended = chain_day(
            model, target.generation_type, int(months[d]), starting_point,
            trace.ramp_limit, config, rng,
        )
        if gtype.intermittent_dispatch:
            shape = apply_duty_cycle(shape, duty)
        trace.duties.append(duty)
        trace.resamples.append(attempts)
        trace.blended.append(blended)
        starting_point = float(shape[-1])
        days_mw[d] = shape * (capacity * month_scale[months[d] - 1])

    values = days_mw.reshape(-1)
    values, trace.rescale_iterations = _rescale_to_energy(
        values, target.annual_energy_mwh, capacity
    )
    profile = HourlyProfile(
        site_id=target.site_id,
        generation_type=gtype,
        year=target.target_year,
        values=values,
    )
    return profile, trace


def generate_year(
    model: TrainedGanModel,
    target: ForecastTarget,
    history: Sequence[HourlyProfile],
    metas: Mapping[str, SiteMeta],
    config: SynthesisConfig,
    rng: np.random.Generator | None = None,
) -> HourlyProfile:
    """Synthesize one continuous yearly profile meeting the forecast target."""
    profile, _ = generate_year_traced(model, target, history, metas, config, rng)
    return profile


def _rescale_to_energy(values: np.ndarray, target_mwh: float, capacity: float) -> tuple[np.ndarray, int]:
    """Uniformly rescale to the target energy, clipping to capacity as needed.

    Clipping removes energy, so scale-then-clip is iterated; the clipped set
    only grows, which makes the total monotone and the loop convergent
    whenever the target is feasible.
    """
    v = values.copy()
    for iteration in range(1, MAX_RESCALE_ITERATIONS + 1):
        total = v.sum()
        if total <= 0:
            raise SynthesisError("generated profile has zero energy; cannot rescale")
        v *= target_mwh / total
        if v.max() <= capacity:
            return v, iteration
        np.clip(v, 0.0, capacity, out=v)
    if abs(v.sum() / target_mwh - 1.0) <= ENERGY_RTOL:
        return v, MAX_RESCALE_ITERATIONS
    raise SynthesisError(
        f"energy rescale did not converge to {ENERGY_RTOL:.1%} within "
        f"{MAX_RESCALE_ITERATIONS} iterations (target {target_mwh} MWh)"
    )


def generate_portfolio(
    model: TrainedGanModel,
    targets: Sequence[ForecastTarget],
    history: Sequence[HourlyProfile],
    metas: Mapping[str, SiteMeta],
    config: SynthesisConfig,
) -> tuple[list[HourlyProfile], dict[tuple[str, int], str]]:
    """Generate one profile per target with independent per-(site, year) streams.

    Returns (profiles, errors); failed targets land in ``errors`` keyed by
    (site_id, target_year) and do not abort the rest.
    """
    profiles: list[HourlyProfile] = []
    errors: dict[tuple[str, int], str] = {}
    for target in targets:
        try:
            profiles.append(generate_year(model, target, history, metas, config))
        except (SynthesisError, KeyError, ValueError) as exc:
            errors[(target.site_id, target.target_year)] = str(exc)
    return profiles, errors


def boundary_gaps(values: np.ndarray) -> np.ndarray:
    """|first hour of day d - last hour of day d-1| for every day boundary."""
    days = np.asarray(values).reshape(-1, HOURS_PER_DAY)
    return np.abs(days[1:, 0] - days[:-1, -1])
