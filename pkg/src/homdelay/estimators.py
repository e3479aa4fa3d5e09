"""Delay estimators: the analytic non-resolved formula and grid-search MLEs.

The non-resolved estimator inverts the bunching excess analytically,
dt = sqrt(log(eta^2 * (n_b + n_c) / (n_b - n_c))) / sigma, and fails on any
sample whose counts make that inversion impossible; failures are data the
harness counts, not exceptions, because their onset is exactly the
dynamic-range collapse of the non-resolved method.

The frequency-resolved estimators maximise the log-likelihood on a delay
grid in two stages: a coarse sweep over [t_min, t_max] followed by a fine
sweep around the coarse argmax.  The likelihood is even in the delay, so
the grid covers dt >= 0 only (recorded in the result metadata) and ties
break toward the smaller delay.  Per-record probabilities are floored at
1e-12 inside the logs to survive exact beat antinodes at eta = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .detector import BinnedDetectorSpec, bin_node_layout, max_unambiguous_delay
from .errors import ConfigError, EmptySampleError
from .model import PhotonPairModel, Records, prob_nonresolved

FLOOR_PROB = 1e-12

FAIL_B_LE_C = "b_le_c"
FAIL_B_ZERO = "b_zero"
FAIL_Q_NON_POSITIVE = "q_non_positive"
FAIL_EMPTY_SAMPLE = "empty_sample"


@dataclass(frozen=True)
class DelayGrid:
    """Two-stage search grid over non-negative delays (ps)."""

    t_min: float
    t_max: float
    coarse_step: float
    refine_step: float
    refine_half_width: float

    def __post_init__(self):
        if not (0.0 <= self.t_min < self.t_max):
            raise ConfigError(f"need 0 <= t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if self.coarse_step <= 0 or self.refine_step <= 0 or self.refine_half_width <= 0:
            raise ConfigError("grid steps and half width must be > 0")
        if self.refine_step > self.coarse_step:
            raise ConfigError("refine_step must be <= coarse_step")

    @classmethod
    def for_model(
        cls,
        model: PhotonPairModel,
        t_max: float,
        t_min: float = 0.0,
        spec: BinnedDetectorSpec | None = None,
    ) -> "DelayGrid":
        """Defaults: coarse step tau/10, refine step 0.1 fs, refine window
        two coarse steps; with a detector attached t_max is capped at half
        the unambiguous-delay ceiling."""
        if spec is not None:
            t_max = min(t_max, 0.5 * max_unambiguous_delay(spec))
        coarse = model.tau / 10.0
        return cls(
            t_min=t_min,
            t_max=t_max,
            coarse_step=coarse,
            refine_step=1e-4,
            refine_half_width=2.0 * coarse,
        )

    def coarse_grid(self) -> tuple[float, float, int]:
        n = int(math.floor((self.t_max - self.t_min) / self.coarse_step + 1e-9)) + 1
        return self.t_min, self.coarse_step, n

    def refine_grid(self, center: float) -> tuple[float, float, int]:
        lo = max(self.t_min, center - self.refine_half_width)
        hi = min(self.t_max, center + self.refine_half_width)
        n = int(math.floor((hi - lo) / self.refine_step + 1e-9)) + 1
        return lo, self.refine_step, n


@dataclass
class EstimateResult:
    """Point estimate or a counted failure, never both."""

    value: float | None
    loglik_at_max: float | None = None
    failure_reason: str | None = None
    grid_diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.value is None) == (self.failure_reason is None):
            raise ConfigError("exactly one of value / failure_reason must be set")

    @property
    def failed(self) -> bool:
        return self.failure_reason is not None

    def to_json_dict(self) -> dict:
        out: dict = {}
        if self.failed:
            out["failure"] = self.failure_reason
        else:
            out["value_ps"] = self.value
        out["loglik"] = self.loglik_at_max
        grid = dict(self.grid_diagnostics)
        grid["domain"] = "delta_t >= 0 (likelihood is even in delta_t)"
        out["grid"] = grid
        return out


def _failure(reason: str) -> EstimateResult:
    return EstimateResult(value=None, failure_reason=reason)


def estimate_nonresolved(n_b: int, n_c: int, model: PhotonPairModel) -> EstimateResult:
    """Analytic delay estimate from bunching/coincidence counts.

    Consistency: E[n_b - n_c] / N = eta^2 exp(-sigma^2 dt^2), so the log
    argument eta^2 (n_b + n_c)/(n_b - n_c) approaches exp(sigma^2 dt^2).
    Guards (each returning a counted failure): no counts at all, zero
    bunching, b <= c, and a log argument below one (possible for finite
    samples at small delays even with b > c).
    """
    if n_b < 0 or n_c < 0:
        raise ConfigError("counts must be >= 0")
    if n_b + n_c == 0:
        return _failure(FAIL_EMPTY_SAMPLE)
    if n_b == 0:
        return _failure(FAIL_B_ZERO)
    if n_b <= n_c:
        return _failure(FAIL_B_LE_C)
    q = (n_b + n_c) / (n_b - n_c)
    log_arg = model.eta**2 * q
    if log_arg < 1.0:
        return _failure(FAIL_Q_NON_POSITIVE)
    value = math.sqrt(math.log(log_arg)) / model.sigma
    loglik = 0.0
    for count, tag in ((n_b, +1), (n_c, -1)):
        if count:
            loglik += count * math.log(max(prob_nonresolved(model, value, tag), FLOOR_PROB))
    return EstimateResult(value=value, loglik_at_max=loglik)


def loglik_resolved(records: Records, model: PhotonPairModel, delta_t) -> np.ndarray | float:
    """Frequency-resolved log-likelihood (nats) at one or many delays.

    The delay-independent spectral factor is dropped, leaving
    sum_i log[(1 + delta_i eta^2 cos(dw_i t)) / 2].
    """
    if len(records) == 0:
        raise EmptySampleError("no records")
    sign = records.delta.astype(np.float64)
    out = kernels.loglik_points(records.d_omega, sign, model.eta**2, delta_t, FLOOR_PROB)
    return float(out[0]) if np.ndim(delta_t) == 0 else out


def _two_stage_argmax(eval_uniform, grid: DelayGrid) -> tuple[float, float, dict]:
    t0, step, n = grid.coarse_grid()
    ll = eval_uniform(t0, step, n)
    ci = int(np.argmax(ll))
    lo, rstep, rn = grid.refine_grid(t0 + ci * step)
    llr = eval_uniform(lo, rstep, rn)
    ri = int(np.argmax(llr))
    diag = {
        "t_min": grid.t_min,
        "t_max": grid.t_max,
        "coarse_step": step,
        "refine_step": rstep,
        "coarse_index": ci,
        "refine_index": ri,
        "n_coarse": n,
        "n_refine": rn,
    }
    return lo + ri * rstep, float(llr[ri]), diag


def estimate_resolved(records: Records, model: PhotonPairModel, grid: DelayGrid) -> EstimateResult:
    """Maximum-likelihood delay from frequency-resolved records."""
    if len(records) == 0:
        raise EmptySampleError("no records")
    sign = records.delta.astype(np.float64)
    eta2 = model.eta**2

    def eval_uniform(t0, step, n):
        return kernels.loglik_uniform_grid(records.d_omega, sign, eta2, t0, step, n, FLOOR_PROB)

    value, loglik, diag = _two_stage_argmax(eval_uniform, grid)
    return EstimateResult(value=value, loglik_at_max=loglik, grid_diagnostics=diag)


def estimate_resolved_binned(
    records: Records,
    model: PhotonPairModel,
    spec: BinnedDetectorSpec,
    grid: DelayGrid,
) -> EstimateResult:
    """Maximum-likelihood delay from bin-indexed records.

    The per-(bin, outcome) probabilities are reconstructed once per grid
    point from precomputed quadrature nodes and weighted by the observed
    counts, so the cost is independent of the record count.
    """
    if len(records) == 0:
        raise EmptySampleError("no records")
    if records.bin_index is None:
        raise ConfigError("records lack bin_index; sample through a detector spec first")
    if records.bin_index.max(initial=0) > spec.n_max:
        raise ConfigError("record bin index exceeds detector n_max")
    if grid.t_max > max_unambiguous_delay(spec):
        raise ConfigError(
            f"grid t_max {grid.t_max} exceeds the unambiguous-delay ceiling "
            f"{max_unambiguous_delay(spec):.4g} ps"
        )
    spec.validate_coverage(model)

    n_bins = spec.n_max + 1
    bunch = records.delta == 1
    counts_b = np.bincount(records.bin_index[bunch], minlength=n_bins).astype(np.float64)
    counts_c = np.bincount(records.bin_index[~bunch], minlength=n_bins).astype(np.float64)
    node_omega, node_coeff, bin_ptr, a_n = bin_node_layout(model, spec)
    eta2 = model.eta**2

    def eval_uniform(t0, step, n):
        return kernels.binned_loglik_uniform_grid(
            node_omega, node_coeff, bin_ptr, a_n, counts_b, counts_c,
            eta2, t0, step, n, FLOOR_PROB,
        )

    value, loglik, diag = _two_stage_argmax(eval_uniform, grid)
    return EstimateResult(value=value, loglik_at_max=loglik, grid_diagnostics=diag)
