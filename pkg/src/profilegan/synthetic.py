"""Parametric synthetic generation families for self-contained testing.

Three families with known ground-truth statistics cover the behaviours the
pipeline has to learn: a solar-like half-sine with seasonal daylight and
amplitude, a wind-like smoothed AR(1) process squashed into [0, 1], and a
duty-cycled block shape (cogeneration-like) with seasonal on-hours. Every
year is rescaled to the family's requested annual energy, so targets are
exact by construction.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    HOURS_PER_DAY,
    DataError,
    HourlyProfile,
    SiteMeta,
    build_type_registry,
    hours_in_year,
    month_by_day,
)

FAMILY_KINDS = ("solar", "wind", "block")

# Daylight never extends past these bounds, so solar output is identically
# zero there in every generated day.
SOLAR_NIGHT_HOURS = (0, 1, 2, 3, 20, 21, 22, 23)


@dataclass(frozen=True)
class FamilySpec:
    label: str
    kind: str
    site_id: str
    capacity_mw: float
    annual_energy_mwh: float
    noise: float = 0.1
    intermittent: bool = False

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise DataError(f"unknown family kind {self.kind!r}; choose from {FAMILY_KINDS}")
        if self.capacity_mw <= 0 or self.annual_energy_mwh <= 0:
            raise DataError("capacity and annual energy must be positive")
        if not 0 <= self.noise <= 0.5:
            raise DataError("noise must be in [0, 0.5]")


@dataclass(frozen=True)
class SynthDataSpec:
    families: tuple[FamilySpec, ...]
    years: tuple[int, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.families or not self.years:
            raise DataError("spec needs at least one family and one year")
        if len({f.site_id for f in self.families}) != len(self.families):
            raise DataError("family site_ids must be unique")


def default_spec(years: tuple[int, ...] = (2017, 2018, 2019), seed: int = 0) -> SynthDataSpec:
    return SynthDataSpec(
        families=(
            FamilySpec("solar", "solar", "solar_a", 100.0, 160_000.0, noise=0.10),
            FamilySpec("wind", "wind", "wind_a", 80.0, 300_000.0, noise=0.15),
            FamilySpec("cogen", "block", "cogen_a", 50.0, 180_000.0, noise=0.05, intermittent=True),
        ),
        years=tuple(years),
        seed=seed,
    )


def load_family_specs(path: str | Path) -> tuple[FamilySpec, ...]:
    """Read a family spec JSON file ({"families": [{...}, ...]})."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read family spec {path}: {exc}") from exc
    if not isinstance(doc, dict) or "families" not in doc:
        raise DataError(f"family spec {path} must contain a 'families' list")
    families = []
    for i, entry in enumerate(doc["families"]):
        try:
            families.append(FamilySpec(**entry))
        except (TypeError, DataError) as exc:
            raise DataError(f"family spec {path} entry {i}: {exc}") from exc
    return tuple(families)


def _day_fraction(year: int) -> np.ndarray:
    """Phase of each day within the year, aligned to the summer solstice."""
    n_days = hours_in_year(year) // HOURS_PER_DAY
    doy = np.arange(n_days)
    return 2.0 * np.pi * (doy - 171) / 365.25


def _solar_year(family: FamilySpec, year: int, rng: np.random.Generator) -> np.ndarray:
    phase = _day_fraction(year)
    daylight = 12.0 + 4.0 * np.cos(phase)  # hours, 8 in winter to 16 in summer
    rise = 12.0 - daylight / 2.0
    season_amp = 0.6 * (1.0 + 0.25 * np.cos(phase))
    day_noise = np.exp(family.noise * rng.standard_normal(phase.size) - family.noise**2 / 2)
    hours = np.arange(HOURS_PER_DAY) + 0.5
    position = (hours[None, :] - rise[:, None]) / daylight[:, None]
    sun = np.where((position > 0) & (position < 1), np.sin(np.pi * position), 0.0)
    u = season_amp[:, None] * day_noise[:, None] * sun
    hour_noise = np.exp(0.3 * family.noise * rng.standard_normal(u.shape))
    # nameplate clip, as a real inverter would
    return np.minimum(u * hour_noise, 1.0).reshape(-1)


def _wind_year(family: FamilySpec, year: int, rng: np.random.Generator) -> np.ndarray:
    n_hours = hours_in_year(year)
    months = np.repeat(month_by_day(year), HOURS_PER_DAY)
    mean_level = 0.45 * (1.0 + 0.35 * np.cos(2.0 * np.pi * (months - 1) / 12.0))
    rho = 0.97
    eps = rng.standard_normal(n_hours) * np.sqrt(1.0 - rho * rho)
    x = np.empty(n_hours)
    x[0] = rng.standard_normal()
    for t in range(1, n_hours):
        x[t] = rho * x[t - 1] + eps[t]
    logit = np.log(mean_level / (1.0 - mean_level))
    spread = 8.0 * family.noise
    return 1.0 / (1.0 + np.exp(-(logit + spread * x)))


def _block_year(family: FamilySpec, year: int, rng: np.random.Generator) -> np.ndarray:
    months = month_by_day(year)
    n_days = months.size
    mean_hours = 12.0 + 5.0 * np.cos(2.0 * np.pi * (months - 1) / 12.0)
    on_hours = np.clip(np.rint(rng.normal(mean_hours, 2.5)), 0, HOURS_PER_DAY).astype(int)
    level = np.clip(0.85 * (1.0 + family.noise * rng.standard_normal(n_days)), 0.3, 0.98)
    u = np.zeros((n_days, HOURS_PER_DAY))
    for d in range(n_days):
        n = on_hours[d]
        if n == 0:
            continue
        start = int(np.clip(np.rint(rng.normal(6.0, 1.5)), 0, HOURS_PER_DAY - n))
        block = level[d] * np.clip(1.0 + 0.3 * family.noise * rng.standard_normal(n), 0.05, 1.15)
        u[d, start:start + n] = np.minimum(block, 0.99)
    return u.reshape(-1)


_GENERATORS = {"solar": _solar_year, "wind": _wind_year, "block": _block_year}


def generate_family_year(family: FamilySpec, year: int, seed: int) -> np.ndarray:
    """One year of hourly MW for a family, exactly meeting its annual energy."""
    rng = np.random.default_rng([seed, zlib.crc32(family.site_id.encode("utf-8")), year])
    u = _GENERATORS[family.kind](family, year, rng)
    total = u.sum()
    if total <= 0:
        raise DataError(f"family {family.label!r} generated zero output for {year}")
    scale = family.annual_energy_mwh / (family.capacity_mw * total)
    if scale * u.max() > 1.0:
        raise DataError(
            f"family {family.label!r}: annual energy {family.annual_energy_mwh} MWh "
            f"is infeasible at capacity {family.capacity_mw} MW with this shape"
        )
    return family.capacity_mw * scale * u


def make_profiles(spec: SynthDataSpec) -> tuple[list[HourlyProfile], dict[str, SiteMeta]]:
    """Materialize the spec as validated profiles plus site metadata."""
    registry = build_type_registry((f.label, f.intermittent) for f in spec.families)
    by_label = {t.label: t for t in registry}
    metas = {
        f.site_id: SiteMeta(
            site_id=f.site_id,
            generation_type=by_label[f.label],
            installed_capacity_mw=f.capacity_mw,
        )
        for f in spec.families
    }
    profiles = []
    for family in spec.families:
        for year in spec.years:
            profiles.append(
                HourlyProfile(
                    site_id=family.site_id,
                    generation_type=by_label[family.label],
                    year=year,
                    values=generate_family_year(family, year, spec.seed),
                )
            )
    return profiles, metas
