import numpy as np
import pytest

from profilegan.data import GenerationType, HourlyProfile
from profilegan.outage import OutageConfig, availability_mask, inject_outages

GT = GenerationType("thermal", 0, False)


def _profile(values):
    return HourlyProfile("t1", GT, 2018, values)


def _outage_runs(mask):
    """Lengths of consecutive False runs, excluding runs touching the ends."""
    padded = np.concatenate([[True], mask, [True]])
    starts = np.flatnonzero(padded[:-1] & ~padded[1:])
    ends = np.flatnonzero(~padded[:-1] & padded[1:])
    lengths = ends - starts
    interior = (starts > 0) & (ends < mask.size)
    return lengths[interior]


class TestConfig:
    def test_for_out_of_range(self):
        with pytest.raises(ValueError):
            OutageConfig(forced_outage_rate=1.0, mean_time_to_repair=24)
        with pytest.raises(ValueError):
            OutageConfig(forced_outage_rate=-0.1, mean_time_to_repair=24)

    def test_mttr_below_one_hour(self):
        with pytest.raises(ValueError):
            OutageConfig(forced_outage_rate=0.05, mean_time_to_repair=0.5)

    def test_implied_probability_above_one(self):
        with pytest.raises(ValueError, match="probability"):
            OutageConfig(forced_outage_rate=0.9, mean_time_to_repair=1.0)

    def test_stationary_unavailability_is_for(self):
        cfg = OutageConfig(forced_outage_rate=0.07, mean_time_to_repair=12.0)
        p_fail, p_repair = cfg.failure_probability, cfg.repair_probability
        assert p_fail / (p_fail + p_repair) == pytest.approx(0.07, abs=1e-12)


class TestInjection:
    def test_zero_for_returns_profile_unchanged(self):
        values = np.random.default_rng(0).uniform(0, 10, 8760)
        out = inject_outages(_profile(values), OutageConfig(0.0, 24.0, seed=1))
        np.testing.assert_array_equal(out.values, values)

    def test_out_hours_exactly_zero_others_untouched(self):
        values = np.random.default_rng(1).uniform(1.0, 10.0, 8760)
        cfg = OutageConfig(0.10, 24.0, seed=2)
        out = inject_outages(_profile(values), cfg)
        mask = availability_mask(8760, cfg)
        np.testing.assert_array_equal(out.values[~mask], 0.0)
        np.testing.assert_array_equal(out.values[mask], values[mask])

    def test_deterministic_under_seed(self):
        values = np.random.default_rng(2).uniform(0, 5, 8760)
        cfg = OutageConfig(0.05, 24.0, seed=3)
        a = inject_outages(_profile(values), cfg)
        b = inject_outages(_profile(values), cfg)
        np.testing.assert_array_equal(a.values, b.values)

    def test_different_streams_are_independent(self):
        cfg = OutageConfig(0.05, 24.0)
        a = availability_mask(8760, cfg, rng=np.random.default_rng(1))
        b = availability_mask(8760, cfg, rng=np.random.default_rng(2))
        assert not np.array_equal(a, b)


class TestLongRunStatistics:
    def test_unavailability_converges_to_for(self):
        # 100 simulated years
        cfg = OutageConfig(0.05, 24.0, seed=7)
        mask = availability_mask(100 * 8760, cfg)
        unavailability = 1.0 - mask.mean()
        assert 0.045 <= unavailability <= 0.055

    def test_mean_outage_duration_converges_to_mttr(self):
        cfg = OutageConfig(0.05, 24.0, seed=8)
        mask = availability_mask(200 * 8760, cfg)
        runs = _outage_runs(mask)
        assert runs.size >= 500
        assert abs(runs.mean() / 24.0 - 1.0) <= 0.10
