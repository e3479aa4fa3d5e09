"""Finite-frequency-resolution detection model.

A real frequency-resolving detector assigns the (folded) frequency
difference |d_omega| to one of ``n_max + 1`` bins of width 2 epsilon.  The
response of bin n is a triangular kernel peaked at n * epsilon; bin 0 keeps
only the one-sided triangle on [0, epsilon].  Because adjacent triangles sum
to one, the kernels form a partition of unity on [0, n_max * epsilon].

Binned outcome probabilities integrate the |d_omega|-folded resolved density
(factor 2 on d_omega >= 0, so that the two outcomes summed over all bins
carry total probability one) against the kernel:

    P(n, delta) = integral  k_n(|dw| / eps) * 2 * P(delta, dw)  d dw,  dw >= 0

The integrals are done with fixed-order Gauss-Legendre nodes per linear
kernel piece; each piece is far narrower than both the spectral density and
one beat period in the regimes of interest, so a modest node count is exact
to near machine precision (a node-doubling error estimate guards the Fisher
path).

The time-of-flight spectrometer mapping is also here: a dispersive fibre
with group delay dispersion ``gdd`` converts a photon-pair arrival-time
difference into d_omega = arrival_diff / gdd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CoverageError, RangeError
from .model import PhotonPairModel, _check_delta, joint_spectral_density

#: Joint spectral resolution of the reference time-of-flight setup, rad/ps.
DEFAULT_EPSILON = 0.0069

#: Required kernel coverage of the |d_omega| density, in units of sqrt(2)*sigma.
COVERAGE_SIGMAS = 5.0

_NODES_PROB = 48
_NODES_LOGLIK = 16


@dataclass(frozen=True)
class BinnedDetectorSpec:
    """Frequency-binning detector: half-bin width epsilon and top bin index."""

    epsilon: float
    n_max: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")

    @classmethod
    def for_model(cls, model: PhotonPairModel, epsilon: float) -> "BinnedDetectorSpec":
        """Spec with the default bin range: covers 5*sqrt(2)*sigma of density."""
        n_max = math.ceil(COVERAGE_SIGMAS * math.sqrt(2.0) * model.sigma / epsilon)
        return cls(epsilon=epsilon, n_max=max(1, n_max))

    def epsilon_prime(self, model: PhotonPairModel) -> float:
        """Dimensionless resolution epsilon / (2 sigma)."""
        return self.epsilon / (2.0 * model.sigma)

    def range_radps(self) -> float:
        """Largest |d_omega| the detector can register: (n_max + 1) * epsilon."""
        return (self.n_max + 1) * self.epsilon

    def coverage_ok(self, model: PhotonPairModel) -> bool:
        return self.range_radps() >= COVERAGE_SIGMAS * math.sqrt(2.0) * model.sigma

    def validate_coverage(self, model: PhotonPairModel) -> None:
        if not self.coverage_ok(model):
            raise CoverageError(
                f"(n_max+1)*epsilon = {self.range_radps():.4g} rad/ps covers less than "
                f"{COVERAGE_SIGMAS}*sqrt(2)*sigma = "
                f"{COVERAGE_SIGMAS * math.sqrt(2.0) * model.sigma:.4g} rad/ps"
            )


@dataclass(frozen=True)
class TofSpec:
    """Time-of-flight spectrometer: dispersive fibre plus time tagger.

    gdd       total group delay dispersion, ps^2
    ref_freq  central angular frequency the arrival times are referenced to
    """

    gdd: float
    ref_freq: float = 0.0

    def __post_init__(self):
        if self.gdd == 0:
            raise ConfigError("gdd must be nonzero")


def kernel(n: int, x) -> np.ndarray | float:
    """Triangular response weight of bin ``n`` at x = |d_omega| / epsilon.

    Bin 0 is the one-sided triangle 1 - x on [0, 1]; bin n > 0 is the
    symmetric triangle 1 - |x - n| on [n-1, n+1].  Zero outside support.
    """
    if n < 0:
        raise ConfigError(f"bin index must be >= 0, got {n}")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa < 0):
        raise ConfigError("x must be >= 0 (kernel acts on |d_omega| / epsilon)")
    if n == 0:
        out = np.where(xa <= 1.0, np.maximum(0.0, 1.0 - xa), 0.0)
    else:
        out = np.maximum(0.0, 1.0 - np.abs(xa - n))
    return out if out.ndim else float(out)


def _piece_nodes(spec: BinnedDetectorSpec, n_nodes: int):
    """Shared Gauss-Legendre layout for all kernel pieces.

    Row r of the returned node matrix spans [r*eps, (r+1)*eps]; that interval
    is the right (falling, weight 1-xi) piece of bin r and the left (rising,
    weight xi) piece of bin r+1.
    """
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    xi = (x + 1.0) / 2.0
    wq = w / 2.0
    rows = np.arange(spec.n_max + 1)
    omega = (rows[:, None] + xi[None, :]) * spec.epsilon
    return xi, wq, omega


def _bin_outcome_tables(
    model: PhotonPairModel,
    spec: BinnedDetectorSpec,
    delta_t: float,
    n_nodes: int = _NODES_PROB,
):
    """P(n, +1), P(n, -1) and the beat derivative integral D_n for all bins.

    D_n = integral k_n * 2C * dw * sin(dw dt) d dw, so that
    dP(n, delta)/d delta_t = -delta * eta^2 * D_n.  The coincidence
    probability is accumulated through (1 - eta^2) + 2 eta^2 sin^2(dw dt / 2),
    which stays exact when eta = 1 and the beat phase is small.
    """
    xi, wq, omega = _piece_nodes(spec, n_nodes)
    eps = spec.epsilon
    e2 = model.eta**2
    base = 2.0 * joint_spectral_density(model, omega) * eps  # folded density x width
    phase = omega * delta_t
    cosp = np.cos(phase)
    one_minus = (1.0 - e2) + 2.0 * e2 * np.sin(phase / 2.0) ** 2  # 1 - eta^2 cos
    dterm = omega * np.sin(phase)

    w_fall = wq * (1.0 - xi)  # right piece of bin r
    w_rise = wq * xi          # left piece of bin r+1

    def accumulate(field):
        right = (field * w_fall).sum(axis=1)
        left = (field * w_rise).sum(axis=1)
        out = right.copy()
        out[1:] += left[:-1]
        return out

    p_plus = accumulate(base * (1.0 + e2 * cosp))
    p_minus = accumulate(base * one_minus)
    d = accumulate(base * dterm)
    return 0.5 * p_plus, 0.5 * p_minus, 0.5 * d


def bin_node_layout(
    model: PhotonPairModel,
    spec: BinnedDetectorSpec,
    n_nodes: int = _NODES_LOGLIK,
):
    """Flattened per-bin quadrature nodes for fast likelihood evaluation.

    Returns (node_omega, node_coeff, bin_ptr, a_n) in CSR layout: the nodes
    of bin n live at bin_ptr[n]:bin_ptr[n+1], and the bin probabilities are
    P(n, +/-)(t) = (a_n +/- eta^2 * sum_q coeff_q cos(omega_q t)) / 2 with
    a_n = sum_q coeff_q.
    """
    xi, wq, omega = _piece_nodes(spec, n_nodes)
    eps = spec.epsilon
    base = 2.0 * joint_spectral_density(model, omega) * eps
    w_fall = base * (wq * (1.0 - xi))[None, :]
    w_rise = base * (wq * xi)[None, :]

    n_bins = spec.n_max + 1
    sizes = np.full(n_bins, 2 * n_nodes, dtype=np.int64)
    sizes[0] = n_nodes
    bin_ptr = np.zeros(n_bins + 1, dtype=np.int64)
    np.cumsum(sizes, out=bin_ptr[1:])

    node_omega = np.empty(bin_ptr[-1])
    node_coeff = np.empty(bin_ptr[-1])
    node_omega[: n_nodes] = omega[0]
    node_coeff[: n_nodes] = w_fall[0]
    for n in range(1, n_bins):
        sl = slice(bin_ptr[n], bin_ptr[n + 1])
        node_omega[sl] = np.concatenate([omega[n - 1], omega[n]])
        node_coeff[sl] = np.concatenate([w_rise[n - 1], w_fall[n]])
    a_n = np.add.reduceat(node_coeff, bin_ptr[:-1])
    return node_omega, node_coeff, bin_ptr, a_n


def binned_prob(
    model: PhotonPairModel,
    spec: BinnedDetectorSpec,
    delta_t: float,
    n: int,
    delta: int,
) -> float:
    """Probability that a round lands in bin ``n`` with outcome ``delta``."""
    _check_delta(delta)
    if n < 0 or n > spec.n_max:
        raise ConfigError(f"bin index {n} outside [0, {spec.n_max}]")
    spec.validate_coverage(model)
    p_plus, p_minus, _ = _bin_outcome_tables(model, spec, float(delta_t))
    return float(p_plus[n] if delta == +1 else p_minus[n])


def binned_prob_all(
    model: PhotonPairModel,
    spec: BinnedDetectorSpec,
    delta_t: float,
) -> np.ndarray:
    """All binned probabilities as an array of shape (n_max + 1, 2).

    Column 0 is delta = +1, column 1 is delta = -1.
    """
    spec.validate_coverage(model)
    p_plus, p_minus, _ = _bin_outcome_tables(model, spec, float(delta_t))
    return np.stack([p_plus, p_minus], axis=1)


def assign_bin(spec: BinnedDetectorSpec, d_omega: float, random_draw: float) -> int:
    """Stochastic bin assignment realising the triangular response.

    With x = |d_omega| / epsilon between bins n and n+1, returns n with
    probability kernel(n, x) and n+1 with probability kernel(n+1, x); the
    draw decides which.  A draw of exactly 1 - frac (in particular 0.5 at a
    midpoint) goes to the lower bin, keeping seeded replay deterministic.
    """
    x = abs(d_omega) / spec.epsilon
    if x > spec.n_max + 1:
        raise RangeError(
            f"|d_omega| = {abs(d_omega):.4g} rad/ps exceeds detector range "
            f"{spec.range_radps():.4g} rad/ps"
        )
    lower = int(math.floor(x))
    frac = x - lower
    chosen = lower + 1 if random_draw > 1.0 - frac else lower
    if chosen > spec.n_max:
        raise RangeError(
            f"|d_omega| = {abs(d_omega):.4g} rad/ps fell above the top bin {spec.n_max}"
        )
    return chosen


def assign_bins(spec: BinnedDetectorSpec, d_omega: np.ndarray, random_draws: np.ndarray):
    """Vectorised assign_bin. Returns (bins, in_range_mask).

    Out-of-range records are flagged in the mask instead of raising, so the
    sampler can drop and count them.
    """
    x = np.abs(np.asarray(d_omega, dtype=np.float64)) / spec.epsilon
    lower = np.floor(x).astype(np.int64)
    frac = x - lower
    chosen = np.where(np.asarray(random_draws) > 1.0 - frac, lower + 1, lower)
    ok = chosen <= spec.n_max
    return chosen, ok


def tof_to_d_omega(spec: TofSpec, arrival_time_diff) -> np.ndarray | float:
    """Convert a pair arrival-time difference (ps) to d_omega (rad/ps)."""
    out = np.asarray(arrival_time_diff, dtype=np.float64) / spec.gdd
    return out if out.ndim else float(out)


def max_unambiguous_delay(spec: BinnedDetectorSpec) -> float:
    """Hard delay ceiling 1 / epsilon, ps.

    Beat fringes faster than the bin width cannot be tracked; estimation is
    comfortable only well below this, and the harness warns beyond a tenth
    of it.
    """
    return 1.0 / spec.epsilon
