"""Seeded Monte Carlo generation of detection records.

The joint outcome density factorises exactly, so sampling is two-stage and
O(1) per record: draw the frequency difference from its Gaussian marginal
(variance 2 sigma^2), then the port outcome from the conditional Bernoulli
(1 + eta^2 cos(dw dt)) / 2.  The mean frequency, when requested, is an
independent Gaussian(omega0, sigma^2 / 2) draw.

Streams are driven by numpy's PCG64 through ``default_rng(seed)`` and are
bit-reproducible for a fixed config.  Repeat experiments derive sub-streams
as ``seed + repeat_index`` so each repeat is independently replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detector import BinnedDetectorSpec, assign_bins
from .errors import ConfigError
from .model import PhotonPairModel, Records

POST_SELECTED = "post_selected"
PHYSICAL = "physical"


@dataclass(frozen=True)
class SamplerConfig:
    """What to draw: model, true delay, stream seed, and record options.

    loss_mode 'post_selected' keeps every generated pair; 'physical' thins
    the stream with per-pair survival probability gamma^2.  When ``binning``
    is set each surviving record gets a bin index from the triangular
    response; records outside the detector range are dropped and counted.
    """

    model: PhotonPairModel
    true_delay: float
    seed: int
    count: int
    loss_mode: str = POST_SELECTED
    binning: BinnedDetectorSpec | None = None
    emit_mean_freq: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")
        if self.loss_mode not in (POST_SELECTED, PHYSICAL):
            raise ConfigError(f"loss_mode must be '{POST_SELECTED}' or '{PHYSICAL}'")


@dataclass
class DropStats:
    """Records removed between generation and the emitted stream."""

    loss_dropped: int = 0
    range_dropped: int = 0


def draw_records(config: SamplerConfig) -> tuple[Records, DropStats]:
    """Generate the record stream for one experiment repeat.

    Draw order is fixed (d_omega, outcomes, mean frequency, loss thinning,
    bin assignment) so identical configs give bit-identical streams.
    """
    model = config.model
    rng = np.random.default_rng(config.seed)
    n = config.count

    d_omega = rng.normal(0.0, np.sqrt(2.0) * model.sigma, n)
    p_bunch = 0.5 * (1.0 + model.eta**2 * np.cos(d_omega * config.true_delay))
    delta = np.where(rng.random(n) < p_bunch, 1, -1).astype(np.int8)
    mean_freq = None
    if config.emit_mean_freq:
        mean_freq = rng.normal(model.omega0, model.sigma / np.sqrt(2.0), n)

    stats = DropStats()
    if config.loss_mode == PHYSICAL:
        keep = rng.random(n) < model.gamma**2
        stats.loss_dropped = int(n - keep.sum())
        d_omega = d_omega[keep]
        delta = delta[keep]
        if mean_freq is not None:
            mean_freq = mean_freq[keep]

    bin_index = None
    if config.binning is not None:
        draws = rng.random(d_omega.size)
        bins, ok = assign_bins(config.binning, d_omega, draws)
        stats.range_dropped = int((~ok).sum())
        d_omega = d_omega[ok]
        delta = delta[ok]
        bin_index = bins[ok]
        if mean_freq is not None:
            mean_freq = mean_freq[ok]

    return Records(delta, d_omega, mean_freq, bin_index), stats


@dataclass(frozen=True)
class JsiGrid:
    """Rectangular (omega_1, omega_2) grid for empirical joint spectra."""

    lo: float
    hi: float
    n_bins: int = 100

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError("grid hi must exceed lo")
        if self.n_bins < 2:
            raise ConfigError("n_bins must be >= 2")

    @classmethod
    def for_model(cls, model: PhotonPairModel, n_bins: int = 100, half_width_sigmas: float = 4.0):
        hw = half_width_sigmas * model.sigma
        return cls(model.omega0 - hw, model.omega0 + hw, n_bins)


@dataclass
class JsiHistogram:
    """Per-outcome 2-D counts over (omega_1, omega_2)."""

    edges: np.ndarray
    counts_bunching: np.ndarray
    counts_coincidence: np.ndarray
    n_outside: int = 0


def empirical_jsi(records: Records, grid: JsiGrid) -> JsiHistogram:
    """Histogram the implied joint frequencies, split by outcome.

    Requires records carrying the mean frequency.  At a delay dt the
    bunching counts show beat fringes along the anti-diagonal with period
    2 pi / dt in d_omega.
    """
    if records.mean_freq is None:
        raise ConfigError("records lack mean_freq; rerun the sampler with emit_mean_freq")
    w1 = records.mean_freq + records.d_omega / 2.0
    w2 = records.mean_freq - records.d_omega / 2.0
    edges = np.linspace(grid.lo, grid.hi, grid.n_bins + 1)
    out = []
    inside_total = 0
    for tag in (+1, -1):
        sel = records.delta == tag
        h, _, _ = np.histogram2d(w1[sel], w2[sel], bins=[edges, edges])
        inside_total += int(h.sum())
        out.append(h)
    return JsiHistogram(edges, out[0], out[1], n_outside=len(records) - inside_total)
