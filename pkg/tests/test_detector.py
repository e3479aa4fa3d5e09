import numpy as np
import pytest
from scipy import integrate, stats

import homdelay as hd
from homdelay import BinnedDetectorSpec, PhotonPairModel, TofSpec
from homdelay.detector import _bin_outcome_tables, bin_node_layout
from homdelay.errors import ConfigError, CoverageError, RangeError

from conftest import SIGMA


def folded_density(model, dw, dt, tag):
    return 2.0 * np.asarray(hd.prob_freq_resolved(model, dt, dw, tag))


class TestKernel:
    def test_peak_and_edges(self):
        assert hd.kernel(3, 3.0) == 1.0
        assert hd.kernel(3, 2.0) == 0.0
        assert hd.kernel(3, 4.0) == 0.0
        assert hd.kernel(3, 2.5) == 0.5

    def test_bin0_one_sided(self):
        assert hd.kernel(0, 0.0) == 1.0
        assert hd.kernel(0, 0.5) == 0.5
        assert hd.kernel(0, 1.0) == 0.0
        assert hd.kernel(0, 1.5) == 0.0

    def test_partition_of_unity(self):
        # bin 0's one-sided triangle plus bin 1's rising flank already sum to 1
        n_max = 12
        x = np.linspace(0.0, n_max, 10_001)
        total = sum(np.asarray(hd.kernel(n, x)) for n in range(n_max + 1))
        assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_rejects_bad_arguments(self):
        with pytest.raises(ConfigError):
            hd.kernel(-1, 0.5)
        with pytest.raises(ConfigError):
            hd.kernel(2, -0.5)


class TestBinnedDetectorSpec:
    def test_validation(self):
        with pytest.raises(ConfigError):
            BinnedDetectorSpec(epsilon=0.0, n_max=10)
        with pytest.raises(ConfigError):
            BinnedDetectorSpec(epsilon=0.1, n_max=0)

    def test_default_coverage(self, model_ideal):
        spec = BinnedDetectorSpec.for_model(model_ideal, 0.0069)
        assert spec.coverage_ok(model_ideal)
        assert spec.n_max == int(np.ceil(5 * np.sqrt(2) * SIGMA / 0.0069))

    def test_coverage_error(self, model_ideal):
        small = BinnedDetectorSpec(epsilon=0.1, n_max=2)
        with pytest.raises(CoverageError):
            small.validate_coverage(model_ideal)
        with pytest.raises(CoverageError):
            hd.binned_prob(model_ideal, small, 1.0, 0, +1)

    def test_epsilon_prime(self, model_ideal):
        spec = BinnedDetectorSpec(epsilon=0.0069, n_max=600)
        assert spec.epsilon_prime(model_ideal) == pytest.approx(0.0069 / (2 * SIGMA))


class TestBinnedProb:
    def test_no_coincidences_at_zero_delay(self, model_ideal):
        spec = BinnedDetectorSpec.for_model(model_ideal, 0.05)
        for n in (0, 1, 7):
            assert hd.binned_prob(model_ideal, spec, 0.0, n, -1) == 0.0

    @pytest.mark.parametrize("n,tag,dt,eta", [(0, +1, 0.5, 0.9), (3, -1, 2.0, 0.9),
                                              (17, +1, 5.0, 1.0), (40, -1, 10.0, 0.7)])
    def test_against_scipy_quadrature(self, n, tag, dt, eta):
        # independent oracle: adaptive quadrature of kernel x folded density
        model = PhotonPairModel(sigma=SIGMA, eta=eta)
        spec = BinnedDetectorSpec.for_model(model, 0.05)
        eps = spec.epsilon
        lo = 0.0 if n == 0 else (n - 1) * eps
        hi = (n + 1) * eps
        ref, _ = integrate.quad(
            lambda w: hd.kernel(n, w / eps) * folded_density(model, w, dt, tag),
            lo, hi, limit=400, epsabs=1e-14, epsrel=1e-12,
        )
        assert hd.binned_prob(model, spec, dt, n, tag) == pytest.approx(ref, abs=1e-12)

    def test_total_probability(self, model_098):
        # coverage 6 sqrt(2) sigma: unity within 1e-6
        eps = 0.05
        n6 = int(np.ceil(6 * np.sqrt(2) * SIGMA / eps))
        table = hd.binned_prob_all(model_098, BinnedDetectorSpec(eps, n6), 2.0)
        assert table.sum() == pytest.approx(1.0, abs=1e-6)
        assert np.all(table >= 0)
        # coverage exactly 5 sqrt(2) sigma: deficit is the quadrature tail mass
        n5 = int(np.ceil(5 * np.sqrt(2) * SIGMA / eps))
        total5 = hd.binned_prob_all(model_098, BinnedDetectorSpec(eps, n5), 2.0).sum()
        assert 1.0 - 1e-4 <= total5 <= 1.0 + 1e-12

    def test_small_bin_limit_matches_density(self, model_09):
        # P_n / eps -> folded density at dw = n * eps as eps -> 0
        target_dw, dt, tag = 0.4, 3.0, -1
        errors = []
        for eps in (8e-3, 4e-3, 2e-3, 1e-3):
            n = int(round(target_dw / eps))
            spec = BinnedDetectorSpec.for_model(model_09, eps)
            approx = hd.binned_prob(model_09, spec, dt, n, tag) / eps
            errors.append(abs(approx - folded_density(model_09, target_dw, dt, tag)))
        assert errors == sorted(errors, reverse=True)
        assert errors[-1] < 4.0 * errors[0] / 64.0  # ~O(eps^2) shrinkage
        assert errors[-1] < 1e-5

    def test_node_layout_consistent_with_tables(self, model_098):
        spec = BinnedDetectorSpec.for_model(model_098, 0.05)
        node_omega, node_coeff, bin_ptr, a_n = bin_node_layout(model_098, spec, n_nodes=16)
        for dt in (0.0, 1.7, 6.5):
            p_plus, p_minus, _ = _bin_outcome_tables(model_098, spec, dt)
            beat = np.add.reduceat(node_coeff * np.cos(node_omega * dt), bin_ptr[:-1])
            e2 = model_098.eta**2
            assert np.allclose(0.5 * (a_n + e2 * beat), p_plus, atol=1e-10)
            assert np.allclose(0.5 * (a_n - e2 * beat), p_minus, atol=1e-10)


class TestAssignBin:
    def test_exact_grid_point(self):
        spec = BinnedDetectorSpec(epsilon=0.1, n_max=10)
        for draw in (0.0, 0.3, 0.999):
            assert hd.assign_bin(spec, 0.3, draw) == 3
            assert hd.assign_bin(spec, -0.3, draw) == 3

    def test_midpoint_split_and_tie(self):
        spec = BinnedDetectorSpec(epsilon=0.1, n_max=10)
        assert hd.assign_bin(spec, 0.35, 0.3) == 3
        assert hd.assign_bin(spec, 0.35, 0.7) == 4
        # exact midpoint draw goes to the lower bin for seeded replay
        assert hd.assign_bin(spec, 0.35, 0.5) == 3

    def test_range_error(self):
        spec = BinnedDetectorSpec(epsilon=0.1, n_max=10)
        with pytest.raises(RangeError):
            hd.assign_bin(spec, 1.2, 0.5)
        # between n_max and n_max+1 the upper candidate does not exist
        with pytest.raises(RangeError):
            hd.assign_bin(spec, 1.09, 0.99)

    def test_marginals_match_binned_prob(self, model_09):
        # chi^2 of 1e6 assigned samples against the quadrature bin masses
        spec = BinnedDetectorSpec.for_model(model_09, 0.05)
        rng = np.random.default_rng(99)
        n = 1_000_000
        dw = rng.normal(0, np.sqrt(2) * SIGMA, n)
        dt = 2.0
        p_b = 0.5 * (1 + model_09.eta**2 * np.cos(dw * dt))
        tag = np.where(rng.random(n) < p_b, 1, -1)
        bins, ok = hd.detector.assign_bins(spec, dw, rng.random(n))
        table = hd.binned_prob_all(model_09, spec, dt)
        for column, sel in ((0, tag == 1), (1, tag == -1)):
            counts = np.bincount(bins[ok & sel], minlength=spec.n_max + 1).astype(float)
            probs = table[:, column]
            keep = probs * (ok & sel).sum() >= 5.0
            observed = np.append(counts[keep], counts[~keep].sum())
            expected = np.append(probs[keep], probs[~keep].sum())
            expected = expected / expected.sum() * observed.sum()
            p_value = stats.chisquare(observed, expected).pvalue
            assert p_value > 0.01


class TestTof:
    def test_definitional_mapping(self):
        spec = TofSpec(gdd=909.0)
        assert hd.tof_to_d_omega(spec, 0.0) == 0.0
        assert hd.tof_to_d_omega(spec, 909.0) == 1.0

    def test_jitter_floor_and_default_resolution(self):
        # 50 ps single-event jitter through 909 ps^2 of dispersion
        assert hd.tof_to_d_omega(TofSpec(gdd=909.0), 50.0) == pytest.approx(0.055, abs=5e-4)
        assert hd.DEFAULT_EPSILON == 0.0069

    def test_gdd_must_be_nonzero(self):
        with pytest.raises(ConfigError):
            TofSpec(gdd=0.0)


class TestMaxUnambiguousDelay:
    def test_reference_value(self):
        assert hd.max_unambiguous_delay(BinnedDetectorSpec(0.0069, 600)) == pytest.approx(
            144.9, abs=0.05
        )

    def test_linear_scaling(self):
        assert hd.max_unambiguous_delay(BinnedDetectorSpec(0.069, 600)) == pytest.approx(
            14.49, abs=0.01
        )
        assert hd.max_unambiguous_delay(BinnedDetectorSpec(0.00069, 600)) == pytest.approx(
            1449.3, abs=0.1
        )
