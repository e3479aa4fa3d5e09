import numpy as np
import pytest

import homdelay as hd
from homdelay import (
    BinnedDetectorSpec,
    DelayGrid,
    EtaTable,
    PhotonPairModel,
    SweepConfig,
    allan_variance,
    micro_shift_experiment,
    run_sweep,
)
from homdelay.errors import ConfigError, InsufficientDataError
from homdelay.estimators import EstimateResult
from homdelay.harness import _aggregate

from conftest import SIGMA


class TestAllanVariance:
    def test_constant_series_is_zero(self):
        out = allan_variance(np.full(10_000, 3.7), [10, 100])
        assert all(v == 0.0 for _, v in out)

    def test_white_noise_scaling(self):
        rng = np.random.default_rng(2718)
        v = 4.0
        series = rng.normal(0, np.sqrt(v), 1_000_000)
        for m, av in allan_variance(series, [10, 100, 1000]):
            assert abs(av - v / m) / (v / m) < 0.10, f"m={m}"

    def test_stationary_outcome_stream_has_no_drift(self, model_098):
        rec, _ = hd.draw_records(
            hd.SamplerConfig(model=model_098, true_delay=2.0, seed=99, count=300_000)
        )
        series = rec.delta.astype(float)
        points = dict(allan_variance(series, [10, 100, 1000]))
        # white-noise-like decline, no rise at long cluster sizes
        assert points[100] < points[10]
        assert points[1000] < points[100]
        assert 50 < points[10] / points[1000] < 200

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            allan_variance(np.arange(15), [10])
        with pytest.raises(ConfigError):
            allan_variance(np.arange(15), [0])


class TestAggregation:
    def test_failures_excluded_and_counted(self):
        estimates = [
            EstimateResult(value=2.0, loglik_at_max=0.0),
            EstimateResult(value=4.0, loglik_at_max=0.0),
            EstimateResult(value=None, failure_reason="b_le_c"),
            EstimateResult(value=None, failure_reason="b_le_c"),
        ]
        point = _aggregate(3.0, "nr", 0.98, estimates, 100, 0.1)
        assert point.n_success == 2
        assert point.failure_fraction == 0.5
        assert point.failure_counts == {"b_le_c": 2}
        assert point.mean_ps == 3.0
        assert point.bias_ps == 0.0
        # mse = bias^2 + sample variance by construction
        assert point.mse_ps2 == pytest.approx(point.bias_ps**2 + point.std_ps**2)
        # at failure fraction >= 50% the empirical information is withheld
        assert point.f_exp is None
        assert point.crb_var_ps2 == pytest.approx(1.0 / (100 * 0.1))

    def test_f_exp_present_below_half_failures(self):
        estimates = [EstimateResult(value=v, loglik_at_max=0.0) for v in (1.0, 1.2, 0.9)]
        estimates.append(EstimateResult(value=None, failure_reason="b_zero"))
        point = _aggregate(1.0, "nr", 0.9, estimates, 1000, 0.2)
        assert point.failure_fraction == 0.25
        assert point.f_exp == pytest.approx(1.0 / (1000 * np.var([1.0, 1.2, 0.9], ddof=1)))


class TestSweepConfig:
    def test_validation(self, model_098):
        with pytest.raises(ConfigError):
            SweepConfig(model=model_098, delays=(3.0, 1.0), repeats=5, samples_per_repeat=10)
        with pytest.raises(ConfigError):
            SweepConfig(model=model_098, delays=(1.0,), repeats=0, samples_per_repeat=10)
        with pytest.raises(ConfigError):
            SweepConfig(model=model_098, delays=(1.0,), repeats=1, samples_per_repeat=10,
                        estimators=("nr", "mystery"))
        with pytest.raises(ConfigError):
            SweepConfig(model=model_098, delays=(1.0,), repeats=1, samples_per_repeat=10,
                        estimators=("fr_binned",))

    def test_eta_table_coverage_checked(self, model_098):
        table = EtaTable([(5.0, 0.95), (10.0, 0.9)])
        with pytest.raises(ConfigError):
            SweepConfig(model=model_098, delays=(3.0, 7.0), repeats=1,
                        samples_per_repeat=10, eta_table=table)

    def test_eta_table_interpolation(self):
        table = EtaTable([(5.0, 0.95), (10.0, 0.90), (20.0, 0.85)])
        assert table(5.0) == 0.95
        assert table(7.5) == pytest.approx(0.925)
        assert table(15.0) == pytest.approx(0.875)
        with pytest.raises(ConfigError):
            table(25.0)


class TestRunSweep:
    def test_nr_unbiased_at_small_delays(self, model_098):
        # analytic estimator stays unbiased through the coherence window
        config = SweepConfig(
            model=model_098,
            delays=(0.5, 1.0, 2.0, 3.0),
            repeats=200,
            samples_per_repeat=1000,
            estimators=("nr",),
            seed=424_242,
        )
        report = run_sweep(config)
        for delay in config.delays:
            point = report.point(delay, "nr")
            se = point.std_ps / np.sqrt(point.n_success)
            assert abs(point.bias_ps) < 3.0 * se, f"delay {delay}"
            assert point.failure_fraction < 0.05

    def test_determinism(self, model_098):
        config = SweepConfig(
            model=model_098, delays=(1.0, 2.0), repeats=20, samples_per_repeat=200,
            estimators=("nr", "fr"), seed=7,
            grid=DelayGrid(t_min=0, t_max=4, coarse_step=0.098,
                           refine_step=1e-3, refine_half_width=0.196),
        )
        a = run_sweep(config).to_json_dict(include_timestamp=False)
        b = run_sweep(config).to_json_dict(include_timestamp=False)
        assert a == b

    def test_mse_ratio_present_for_joint_runs(self, model_098):
        config = SweepConfig(
            model=model_098, delays=(2.0,), repeats=30, samples_per_repeat=500,
            estimators=("nr", "fr"), seed=11,
            grid=DelayGrid(t_min=0, t_max=4, coarse_step=0.098,
                           refine_step=1e-3, refine_half_width=0.196),
        )
        report = run_sweep(config)
        assert repr(2.0) in report.mse_ratio
        assert report.mse_ratio[repr(2.0)] > 0

    def test_eta_table_applies_per_delay(self, model_098):
        table = EtaTable([(1.0, 0.9), (3.0, 0.7)])
        config = SweepConfig(
            model=model_098, delays=(1.0, 3.0), repeats=5, samples_per_repeat=100,
            estimators=("nr",), eta_table=table, seed=3,
        )
        report = run_sweep(config)
        assert report.point(1.0, "nr").eta_used == 0.9
        assert report.point(3.0, "nr").eta_used == 0.7

    def test_csv_report_shape(self, model_098):
        config = SweepConfig(
            model=model_098, delays=(1.0,), repeats=5, samples_per_repeat=100,
            estimators=("nr",), seed=3,
        )
        text = run_sweep(config).to_csv()
        lines = text.strip().split("\n")
        assert lines[0].startswith("delay_ps,estimator,")
        assert len(lines) == 2


class TestEmpiricalInformation:
    def test_fr_reaches_expected_efficiency_window(self, model_09):
        # empirical metrological information within [0.65, 1.0] of the ideal
        # Fisher information (seeded; asymptotically var ~= 1.0-1.1 x CRB)
        config = SweepConfig(
            model=model_09, delays=(2.0,), repeats=500, samples_per_repeat=1000,
            estimators=("fr",), seed=52_000,
            grid=DelayGrid(t_min=0.0, t_max=4.0, coarse_step=0.098,
                           refine_step=1e-4, refine_half_width=0.196),
        )
        point = run_sweep(config).point(2.0, "fr")
        f_ideal = hd.fisher_resolved_ideal(model_09, 2.0)
        assert point.f_exp is not None
        assert 0.65 * f_ideal <= point.f_exp <= 1.0 * f_ideal


class TestMicroShift:
    def test_zero_shift_consistent_with_zero(self, model_098):
        grid = DelayGrid.for_model(model_098, t_max=5.0)
        report = micro_shift_experiment(
            base=3.0, shift=0.0, n_samples=30_000, model=model_098, grid=grid,
            seed=60, trace_points=0,
        )
        assert abs(report.shift_estimate_ps) < 3.0 * report.combined_std_ps
        assert not report.insufficient_samples

    def test_insufficient_samples_flagged(self, model_098):
        # 1e4 samples put the per-estimate std near 16 fs: a 3 fs shift is
        # not resolvable and the report says so
        grid = DelayGrid.for_model(model_098, t_max=8.0)
        report = micro_shift_experiment(
            base=6.567, shift=0.003, n_samples=10_000, model=model_098, grid=grid,
            seed=61, trace_points=0,
        )
        assert report.crb_std_ps == pytest.approx(0.0163, abs=0.002)
        assert report.insufficient_samples

    def test_trace_checkpoints(self, model_098):
        grid = DelayGrid.for_model(model_098, t_max=4.0)
        report = micro_shift_experiment(
            base=2.0, shift=0.5, n_samples=4000, model=model_098, grid=grid,
            seed=62, trace_points=3,
        )
        ns = [row["n"] for row in report.trace]
        assert ns == sorted(ns)
        assert ns[-1] == 4000
        assert len(ns) == 4  # 500, 1000, 2000, 4000
        assert abs(report.shift_estimate_ps - 0.5) < 3 * report.combined_std_ps

    def test_validation(self, model_098):
        grid = DelayGrid.for_model(model_098, t_max=4.0)
        with pytest.raises(ConfigError):
            micro_shift_experiment(base=0.0, shift=0.1, n_samples=100,
                                   model=model_098, grid=grid)
        with pytest.raises(ConfigError):
            micro_shift_experiment(base=1.0, shift=-0.1, n_samples=100,
                                   model=model_098, grid=grid)
