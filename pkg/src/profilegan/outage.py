"""Monte-Carlo forced-outage post-processing.

Availability follows a two-state hourly Markov chain: repairs complete with
probability 1/MTTR per hour and failures start with probability
FOR / ((1-FOR) * MTTR) per hour, which makes the stationary unavailability
exactly FOR and outage durations geometric with mean MTTR. Hours spent in
the outage state are zeroed; everything else is untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import HourlyProfile


@dataclass(frozen=True)
class OutageConfig:
    forced_outage_rate: float  # long-run unavailability, in [0, 1)
    mean_time_to_repair: float  # mean outage duration, hours
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.forced_outage_rate < 1:
            raise ValueError(f"forced_outage_rate must be in [0, 1), got {self.forced_outage_rate}")
        if self.mean_time_to_repair < 1:
            raise ValueError(f"mean_time_to_repair must be >= 1 hour, got {self.mean_time_to_repair}")
        if self.failure_probability > 1:
            raise ValueError(
                "forced_outage_rate/mean_time_to_repair combination implies a per-hour "
                f"failure probability of {self.failure_probability:.3g} > 1"
            )

    @property
    def repair_probability(self) -> float:
        return 1.0 / self.mean_time_to_repair

    @property
    def failure_probability(self) -> float:
        f = self.forced_outage_rate
        return f / ((1.0 - f) * self.mean_time_to_repair)


def availability_mask(n_hours: int, config: OutageConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Boolean per-hour availability (True = producing) of the two-state chain.

    The initial state is drawn from the stationary distribution; sojourn
    times are drawn directly as geometric variables, which is equivalent to
    stepping the chain hour by hour (memorylessness covers the in-progress
    initial sojourn).
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    mask = np.ones(n_hours, dtype=bool)
    if config.forced_outage_rate == 0:
        return mask
    out = bool(rng.random() < config.forced_outage_rate)
    pos = 0
    while pos < n_hours:
        if out:
            run = int(rng.geometric(config.repair_probability))
            mask[pos:pos + run] = False
        else:
            run = int(rng.geometric(config.failure_probability))
        pos += run
        out = not out
    return mask


def inject_outages(profile: HourlyProfile, config: OutageConfig, rng: np.random.Generator | None = None) -> HourlyProfile:
    """Superimpose random forced outages; out-hours produce exactly 0 MW."""
    if config.forced_outage_rate == 0:
        return HourlyProfile(
            site_id=profile.site_id,
            generation_type=profile.generation_type,
            year=profile.year,
            values=profile.values.copy(),
        )
    mask = availability_mask(profile.values.size, config, rng)
    return HourlyProfile(
        site_id=profile.site_id,
        generation_type=profile.generation_type,
        year=profile.year,
        values=np.where(mask, profile.values, 0.0),
    )
