import numpy as np
import pytest
from scipy import stats

import homdelay as hd
from homdelay import (
    BinnedDetectorSpec,
    JsiGrid,
    PhotonPairModel,
    SamplerConfig,
    draw_records,
    empirical_jsi,
)
from homdelay.errors import ConfigError

from conftest import SIGMA


def cfg(model, dt, seed, n, **kw):
    return SamplerConfig(model=model, true_delay=dt, seed=seed, count=n, **kw)


class TestDrawRecords:
    def test_seed_determinism(self, model_098):
        a, _ = draw_records(cfg(model_098, 3.0, 11, 5000, emit_mean_freq=True))
        b, _ = draw_records(cfg(model_098, 3.0, 11, 5000, emit_mean_freq=True))
        assert np.array_equal(a.delta, b.delta)
        assert np.array_equal(a.d_omega, b.d_omega)
        assert np.array_equal(a.mean_freq, b.mean_freq)

    def test_substreams_differ(self, model_098):
        a, _ = draw_records(cfg(model_098, 3.0, 11, 1000))
        b, _ = draw_records(cfg(model_098, 3.0, 12, 1000))
        assert not np.array_equal(a.d_omega, b.d_omega)

    def test_perfect_overlap_zero_delay_always_bunches(self, model_ideal):
        rec, _ = draw_records(cfg(model_ideal, 0.0, 1, 10_000))
        assert np.all(rec.delta == 1)

    def test_distinguishable_photons_fair_coin(self):
        m = PhotonPairModel(sigma=SIGMA, eta=0.0)
        n = 1_000_000
        rec, _ = draw_records(cfg(m, 5.0, 2, n))
        frac = (rec.delta == 1).mean()
        assert abs(frac - 0.5) < 3.0 * np.sqrt(0.25 / n)

    def test_ks_against_gaussian_marginal(self, model_098):
        rec, _ = draw_records(cfg(model_098, 2.0, 31, 100_000))
        p = stats.kstest(rec.d_omega, stats.norm(scale=np.sqrt(2) * SIGMA).cdf).pvalue
        assert p > 0.01

    def test_stratified_conditional_bunching(self, model_09):
        # 50 dw strata: empirical bunching frequency vs the beat conditional
        dt = 2.0
        rec, _ = draw_records(cfg(model_09, dt, 17, 100_000))
        edges = np.quantile(rec.d_omega, np.linspace(0, 1, 51))
        edges[0] -= 1e-9
        idx = np.digitize(rec.d_omega, edges[1:-1])
        for s in range(50):
            sel = idx == s
            n_s = sel.sum()
            p_model = float(np.mean(0.5 * (1 + model_09.eta**2 * np.cos(rec.d_omega[sel] * dt))))
            p_hat = float((rec.delta[sel] == 1).mean())
            se = np.sqrt(max(p_model * (1 - p_model), 1e-12) / n_s)
            assert abs(p_hat - p_model) < 4.0 * se, f"stratum {s}"

    def test_physical_loss_thinning(self):
        m = PhotonPairModel(sigma=SIGMA, eta=0.9, gamma=0.6)
        n = 200_000
        rec, drops = draw_records(cfg(m, 1.0, 4, n, loss_mode="physical"))
        assert len(rec) + drops.loss_dropped == n
        p = stats.binomtest(len(rec), n, 0.36).pvalue
        assert p > 0.01

    def test_mean_freq_moments(self, model_098):
        rec, _ = draw_records(cfg(model_098, 0.0, 6, 1_000_000, emit_mean_freq=True))
        assert rec.mean_freq.mean() == pytest.approx(model_098.omega0, abs=3e-3)
        assert rec.mean_freq.var() == pytest.approx(SIGMA**2 / 2.0, rel=0.01)
        assert rec.mean_freq.var() == pytest.approx(0.1302, abs=0.002)

    def test_binned_records(self, model_098):
        spec = BinnedDetectorSpec.for_model(model_098, 0.0069)
        rec, drops = draw_records(cfg(model_098, 5.0, 8, 20_000, binning=spec))
        assert rec.bin_index is not None
        assert rec.bin_index.max() <= spec.n_max
        assert len(rec) + drops.range_dropped == 20_000

    def test_range_drop_accounting(self, model_098):
        tight = BinnedDetectorSpec(epsilon=0.2, n_max=1)  # covers |dw| < 0.4 only
        rec, drops = draw_records(cfg(model_098, 1.0, 9, 10_000, binning=tight))
        assert drops.range_dropped > 1000
        assert len(rec) + drops.range_dropped == 10_000

    def test_config_validation(self, model_098):
        with pytest.raises(ConfigError):
            SamplerConfig(model=model_098, true_delay=1.0, seed=1, count=0)
        with pytest.raises(ConfigError):
            SamplerConfig(model=model_098, true_delay=1.0, seed=1, count=10, loss_mode="maybe")


class TestEmpiricalJsi:
    def test_no_coincidences_at_zero_delay(self, model_ideal):
        rec, _ = draw_records(cfg(model_ideal, 0.0, 3, 20_000, emit_mean_freq=True))
        jsi = empirical_jsi(rec, JsiGrid.for_model(model_ideal))
        assert jsi.counts_coincidence.sum() == 0
        assert jsi.counts_bunching.sum() + jsi.n_outside == 20_000

    def test_requires_mean_freq(self, model_ideal):
        rec, _ = draw_records(cfg(model_ideal, 0.0, 3, 100))
        with pytest.raises(ConfigError):
            empirical_jsi(rec, JsiGrid.for_model(model_ideal))

    def test_rotated_marginal_equals_dw_histogram(self, model_098):
        # change of variables: histogram over (sum, difference) marginalised
        # over the sum axis is exactly the d_omega histogram
        rec, _ = draw_records(cfg(model_098, 6.5, 12, 50_000, emit_mean_freq=True))
        d_edges = np.linspace(-4, 4, 81)
        s_edges = np.linspace(2 * model_098.omega0 - 8, 2 * model_098.omega0 + 8, 61)
        h2, _, _ = np.histogram2d(2 * rec.mean_freq, rec.d_omega, bins=[s_edges, d_edges])
        h1, _ = np.histogram(rec.d_omega, bins=d_edges)
        inside = (2 * rec.mean_freq >= s_edges[0]) & (2 * rec.mean_freq <= s_edges[-1])
        h1_inside, _ = np.histogram(rec.d_omega[inside], bins=d_edges)
        assert np.array_equal(h2.sum(axis=0), h1_inside)
        assert inside.mean() > 0.999  # the sum window covers essentially everything
        assert np.abs(h2.sum(axis=0) - h1).max() <= h1.sum() * 0.001

    def test_beat_fringes_have_expected_period(self, model_098):
        # the bunching/coincidence contrast in dw oscillates with period 2pi/dt
        dt = 6.5
        rec, _ = draw_records(cfg(model_098, dt, 14, 400_000, emit_mean_freq=True))
        edges = np.linspace(-2.5, 2.5, 126)
        centers = 0.5 * (edges[1:] + edges[:-1])
        hb, _ = np.histogram(rec.d_omega[rec.delta == 1], bins=edges)
        hc, _ = np.histogram(rec.d_omega[rec.delta == -1], bins=edges)
        contrast = (hb - hc) / np.maximum(hb + hc, 1)
        candidates = np.linspace(5.5, 7.5, 2001)
        fits = [np.sum(contrast * np.cos(centers * t)) for t in candidates]
        best = candidates[int(np.argmax(fits))]
        assert 2 * np.pi / best == pytest.approx(0.967, abs=0.02)

    def test_jsi_fringes_along_antidiagonal(self, model_098):
        # collapse the 2-D bunching histogram along the mean-frequency
        # diagonal: the first minimum sits near dw = pi / dt
        dt = 6.5
        rec, _ = draw_records(cfg(model_098, dt, 14, 400_000, emit_mean_freq=True))
        grid = JsiGrid.for_model(model_098, n_bins=160)
        jsi = empirical_jsi(rec, grid)
        step = (grid.hi - grid.lo) / grid.n_bins
        offsets = np.arange(-159, 160)
        profile = np.array([np.trace(jsi.counts_bunching, offset=k) for k in offsets])
        dw_axis = offsets * step  # omega_1 - omega_2 along anti-diagonals
        node = np.pi / dt
        window = (np.abs(dw_axis) > 0.2) & (np.abs(dw_axis) < 0.75)
        first_min = np.abs(dw_axis[window][np.argmin(profile[window])])
        assert first_min == pytest.approx(node, abs=2.5 * step)
