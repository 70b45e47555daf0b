import numpy as np
import pytest
from hypothesis import given, strategies as st

from profilegan.data import GenerationType, HourlyProfile
from profilegan.metrics import (
    MetricsReport,
    acf,
    average_profile_baseline,
    diversity,
    evaluate,
    memorization_distance,
    random_sampling_baseline,
    wasserstein1,
)
from profilegan.synthesis import ForecastTarget

GT = GenerationType("hydro", 0, False)

finite_floats = st.floats(-1e6, 1e6, allow_nan=False)


class TestWasserstein:
    def test_identical_samples_are_zero(self):
        a = np.array([1.0, 5.0, 2.0])
        assert wasserstein1(a, a.copy()) == 0.0

    def test_point_masses(self):
        assert wasserstein1(np.array([3.0]), np.array([7.5])) == pytest.approx(4.5)

    def test_unequal_sizes_point_mass(self):
        assert wasserstein1(np.array([2.0, 2.0, 2.0]), np.array([5.0])) == pytest.approx(3.0)

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            wasserstein1(np.array([]), np.array([1.0]))

    @given(st.lists(finite_floats, min_size=1, max_size=30), st.floats(-100, 100))
    def test_translation_property(self, values, shift):
        a = np.asarray(values)
        assert wasserstein1(a, a + shift) == pytest.approx(abs(shift), abs=1e-9)

    @given(
        st.lists(finite_floats, min_size=1, max_size=20),
        st.lists(finite_floats, min_size=1, max_size=20),
    )
    def test_symmetry(self, xs, ys):
        a, b = np.asarray(xs), np.asarray(ys)
        assert wasserstein1(a, b) == pytest.approx(wasserstein1(b, a), rel=1e-12, abs=1e-12)


class TestAcf:
    def test_daily_sinusoid_peaks_at_lag_24(self):
        # long series so the (1 - k/n) taper of the standard estimator is negligible
        t = np.arange(24 * 2100)
        series = np.sin(2 * np.pi * t / 24)
        values = acf(series, 48)
        assert values[0] == 1.0
        assert values[24] >= 0.999

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError, match="constant"):
            acf(np.full(1000, 3.3), 10)

    def test_white_noise_has_no_structure(self):
        series = np.random.default_rng(6).standard_normal(10_000)
        values = acf(series, 10)
        assert np.all(np.abs(values[1:]) < 0.05)  # SE ~ 1/sqrt(n) = 0.01


class TestDiversity:
    def test_duplicate_day_detected(self):
        days = np.vstack([np.ones(24), np.zeros(24), np.ones(24)])
        min_d, dupes = diversity(days)
        assert min_d == 0.0 and dupes == 1

    def test_single_hour_delta(self):
        a = np.zeros(24)
        b = np.zeros(24)
        b[5] = 0.125
        min_d, dupes = diversity(np.vstack([a, b]))
        assert min_d == pytest.approx(0.125) and dupes == 0

    def test_onehot_days_are_sqrt2_apart(self):
        days = np.eye(24)[:4]
        min_d, _ = diversity(days)
        assert min_d == pytest.approx(np.sqrt(2.0))

    def test_needs_two_days(self):
        with pytest.raises(ValueError):
            diversity(np.ones((1, 24)))


class TestMemorization:
    def test_exact_copies_give_zero(self):
        days = np.random.default_rng(0).uniform(0, 1, (5, 24))
        assert memorization_distance(days, days) == 0.0

    def test_constant_shift(self):
        train = np.zeros((1, 24))
        gen = np.full((3, 24), 0.2)
        assert memorization_distance(gen, train) == pytest.approx(0.2 * np.sqrt(24))

    def test_monotone_in_training_set(self):
        rng = np.random.default_rng(1)
        gen = rng.uniform(0, 1, (10, 24))
        small = rng.uniform(0, 1, (5, 24))
        large = np.vstack([small, rng.uniform(0, 1, (20, 24))])
        assert memorization_distance(gen, large) <= memorization_distance(gen, small)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            memorization_distance(np.empty((0, 24)), np.ones((1, 24)))


def _history_year(year, values):
    return HourlyProfile("h1", GT, year, values)


class TestAverageBaseline:
    def test_single_year_reproduced_exactly(self):
        values = np.random.default_rng(2).uniform(0, 10, 8760)
        history = [_history_year(2018, values)]
        target = ForecastTarget("h1", "hydro", 2018, float(values.sum()))
        out = average_profile_baseline(history, target)
        np.testing.assert_array_equal(out.values, values)

    def test_mean_of_constant_years(self):
        history = [
            _history_year(2017, np.full(8760, 1.0)),
            _history_year(2018, np.full(8760, 3.0)),
        ]
        # target = energy of the pointwise mean (constant 2.0)
        target = ForecastTarget("h1", "hydro", 2019, 2.0 * 8760)
        out = average_profile_baseline(history, target)
        np.testing.assert_allclose(out.values, np.full(8760, 2.0))

    def test_repeated_target_years_identical(self):
        values = np.random.default_rng(3).uniform(0, 10, 8760)
        history = [_history_year(2018, values)]
        outs = [
            average_profile_baseline(
                history, ForecastTarget("h1", "hydro", y, 30_000.0)
            ).values
            for y in (2030, 2031)
        ]
        np.testing.assert_array_equal(outs[0], outs[1])
        assert diversity(np.vstack([o.reshape(-1, 24) for o in outs]))[0] == 0.0

    def test_leap_target_borrows_feb28(self):
        values = np.arange(1.0, 8761.0)
        history = [_history_year(2018, values)]
        target = ForecastTarget("h1", "hydro", 2020, float(values.sum()))
        out = average_profile_baseline(history, target)
        assert out.values.size == 8784
        days = out.values.reshape(-1, 24)
        np.testing.assert_allclose(days[59], days[58])  # Feb 29 borrows Feb 28

    def test_no_history_rejected(self):
        with pytest.raises(ValueError):
            average_profile_baseline([], ForecastTarget("h1", "hydro", 2020, 1.0))


class TestRandomBaseline:
    def test_constant_history_gives_constant_output(self):
        history = [_history_year(2018, np.full(8760, 4.0))]
        target = ForecastTarget("h1", "hydro", 2019, 4.0 * 8760)
        out = random_sampling_baseline(history, target, seed=5)
        np.testing.assert_allclose(out.values, np.full(8760, 4.0))

    def test_seed_reproducible(self):
        values = np.random.default_rng(4).uniform(0, 10, 8760)
        history = [_history_year(2018, values)]
        target = ForecastTarget("h1", "hydro", 2019, 30_000.0)
        a = random_sampling_baseline(history, target, seed=9)
        b = random_sampling_baseline(history, target, seed=9)
        np.testing.assert_array_equal(a.values, b.values)


class TestEvaluate:
    def test_self_evaluation_is_zero_distance(self, synth_dataset):
        _, profiles, metas = synth_dataset
        wind = [p for p in profiles if p.generation_type.label == "wind"]
        targets = [
            ForecastTarget("wind_a", "wind", p.year, p.annual_energy_mwh()) for p in wind
        ]
        report = evaluate(wind, wind, targets, metas)
        assert report.magnitude_error == pytest.approx(0.0, abs=1e-12)
        assert report.hourly_profile_rmse == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(report.value_distribution_w1, 0.0, atol=1e-12)
        assert report.acf_rmse == pytest.approx(0.0, abs=1e-12)
        assert report.ramp_w1 == pytest.approx(0.0, abs=1e-12)
        assert report.memorization_nn_distance == 0.0
        assert 0.0 <= report.boundary_violation_rate <= 1.0
        assert report.duty_w1 is None  # wind is not intermittent-dispatch

    def test_duty_reported_for_intermittent(self, synth_dataset):
        _, profiles, metas = synth_dataset
        cogen = [p for p in profiles if p.generation_type.label == "cogen"]
        targets = [
            ForecastTarget("cogen_a", "cogen", p.year, p.annual_energy_mwh()) for p in cogen
        ]
        report = evaluate(cogen, cogen, targets, metas)
        assert report.duty_w1 == pytest.approx(0.0, abs=1e-12)

    def test_magnitude_error_definition(self, synth_dataset):
        _, profiles, metas = synth_dataset
        wind = [p for p in profiles if p.generation_type.label == "wind"][:1]
        target = ForecastTarget("wind_a", "wind", wind[0].year, 2.0 * wind[0].annual_energy_mwh())
        report = evaluate(wind, wind, target, metas)
        assert report.magnitude_error == pytest.approx(0.5)

    def test_mixed_types_rejected(self, synth_dataset):
        _, profiles, metas = synth_dataset
        wind = [p for p in profiles if p.generation_type.label == "wind"]
        solar = [p for p in profiles if p.generation_type.label == "solar"]
        target = ForecastTarget("wind_a", "wind", 2017, 1000.0)
        with pytest.raises(ValueError, match="types"):
            evaluate(wind, solar, target, metas)

    def test_csv_row_matches_header(self, synth_dataset):
        _, profiles, metas = synth_dataset
        wind = [p for p in profiles if p.generation_type.label == "wind"]
        target = ForecastTarget("wind_a", "wind", 2017, wind[0].annual_energy_mwh())
        report = evaluate(wind[:1], wind, target, metas)
        assert len(report.csv_row()) == len(MetricsReport.csv_header())


def test_evaluate_is_pure(synth_dataset):
    _, profiles, metas = synth_dataset
    wind = [p for p in profiles if p.generation_type.label == "wind"]
    targets = [ForecastTarget("wind_a", "wind", p.year, p.annual_energy_mwh()) for p in wind]
    a = evaluate(wind[:1], wind, targets[:1], metas)
    b = evaluate(wind[:1], wind, targets[:1], metas)
    assert a.to_dict() == b.to_dict()
