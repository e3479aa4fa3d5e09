"""Photon-pair state and ideal (infinite-resolution) outcome probabilities.

Two photons with identical Gaussian spectra (bandwidth ``sigma``, centre
``omega0``) meet on a balanced beam splitter with a relative arrival delay
``delta_t``.  Each measurement round yields a port outcome ``delta`` (+1 both
photons in one port, -1 one photon in each) and, with frequency-resolving
detectors, the frequency difference ``d_omega`` of the pair.  The outcome
distributions implemented here are

* non-resolved:      P(delta) = (1 + delta * eta^2 * exp(-sigma^2 dt^2)) / 2
* resolved density:  P(delta, dw) = C(dw)/2 * (1 + delta * eta^2 * cos(dw dt))
* joint density:     G(W) * P(delta, dw)   with W the mean frequency

where C is the Gaussian density of the frequency difference (variance
2 sigma^2) and G the Gaussian density of the mean frequency (variance
sigma^2 / 2).  The beat factor cos(dw dt) carries all the delay information;
the mean frequency W factors out exactly and is therefore useless for delay
estimation.

Units: times in ps, angular frequencies in rad/ps throughout.  Conversion
to/from ordinary-frequency GHz lives in the CLI layer only.

All probabilities here are post-selected (detection efficiency ``gamma``
dropped); gamma enters only the sampler (record thinning) and, optionally,
the Fisher bounds.  ``d_omega`` is signed over the full real line; folding to
|d_omega| happens in the detector model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConfigError

#: Central angular frequency of the 1550 nm telecom band (193 THz), rad/ps.
DEFAULT_OMEGA0 = 2.0 * math.pi * 193.0


class Outcome(IntEnum):
    """Port outcome of one measurement round: bunching or coincidence."""

    BUNCHING = +1
    COINCIDENCE = -1


def _check_delta(delta) -> np.ndarray:
    """Validate that delta only contains +1 / -1 and return it as an array."""
    arr = np.asarray(delta)
    if not np.all(np.abs(arr) == 1):
        raise ConfigError(f"outcome tag must be +1 or -1, got {delta!r}")
    return arr


@dataclass(frozen=True)
class PhotonPairModel:
    """Full parameterisation of the two-photon interference probabilities.

    sigma   spectral bandwidth (std of each photon's spectrum), rad/ps
    omega0  central angular frequency, rad/ps
    eta     indistinguishability in all non-temporal degrees of freedom, [0, 1]
    gamma   per-photon detection efficiency, (0, 1]
    """

    sigma: float
    omega0: float = DEFAULT_OMEGA0
    eta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must be in [0, 1], got {self.eta}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if not self.omega0 >= 0:
            raise ConfigError(f"omega0 must be >= 0, got {self.omega0}")

    @property
    def tau(self) -> float:
        """Temporal bandwidth (coherence time scale), ps; sigma * tau = 1/2."""
        return 1.0 / (2.0 * self.sigma)

    @classmethod
    def from_tau(cls, tau: float, **kwargs) -> "PhotonPairModel":
        if not tau > 0:
            raise ConfigError(f"tau must be > 0, got {tau}")
        return cls(sigma=1.0 / (2.0 * tau), **kwargs)


@dataclass(frozen=True)
class DetectionRecord:
    """One measurement outcome.

    delta      +1 (bunching) or -1 (coincidence)
    d_omega    frequency difference omega_1 - omega_2, rad/ps
    mean_freq  optional mean frequency W = (omega_1 + omega_2) / 2, rad/ps
    bin_index  optional detector bin (set only by a binned detector spec)
    """

    delta: int
    d_omega: float
    mean_freq: float | None = None
    bin_index: int | None = None

    def __post_init__(self):
        if self.delta not in (+1, -1):
            raise ConfigError(f"delta must be +1 or -1, got {self.delta}")
        if self.mean_freq is not None:
            w1 = self.mean_freq + self.d_omega / 2.0
            w2 = self.mean_freq - self.d_omega / 2.0
            if not (math.isfinite(w1) and math.isfinite(w2)):
                raise ConfigError("implied joint frequencies are not finite")
        if self.bin_index is not None and self.bin_index < 0:
            raise ConfigError(f"bin_index must be >= 0, got {self.bin_index}")


class Records:
    """Columnar batch of detection records.

    Holds parallel numpy arrays; ``mean_freq`` and ``bin_index`` are present
    only when the producing sampler was configured to emit them.
    """

    def __init__(self, delta, d_omega, mean_freq=None, bin_index=None):
        self.delta = _check_delta(delta).astype(np.int8)
        self.d_omega = np.asarray(d_omega, dtype=np.float64)
        if self.delta.shape != self.d_omega.shape:
            raise ConfigError("delta and d_omega must have the same length")
        self.mean_freq = None if mean_freq is None else np.asarray(mean_freq, dtype=np.float64)
        self.bin_index = None if bin_index is None else np.asarray(bin_index, dtype=np.int64)
        for name in ("mean_freq", "bin_index"):
            col = getattr(self, name)
            if col is not None and col.shape != self.delta.shape:
                raise ConfigError(f"{name} must have the same length as delta")
        if self.bin_index is not None and self.bin_index.size and self.bin_index.min() < 0:
            raise ConfigError("bin_index must be >= 0")

    def __len__(self) -> int:
        return self.delta.size

    def subset(self, n: int) -> "Records":
        """First ``n`` records (used for cumulative-estimate traces)."""
        return Records(
            self.delta[:n],
            self.d_omega[:n],
            None if self.mean_freq is None else self.mean_freq[:n],
            None if self.bin_index is None else self.bin_index[:n],
        )

    def record(self, i: int) -> DetectionRecord:
        return DetectionRecord(
            int(self.delta[i]),
            float(self.d_omega[i]),
            None if self.mean_freq is None else float(self.mean_freq[i]),
            None if self.bin_index is None else int(self.bin_index[i]),
        )


def joint_spectral_density(model: PhotonPairModel, d_omega) -> np.ndarray | float:
    """Density C of the frequency difference: Gaussian, variance 2 sigma^2.

    C(dw) = exp(-dw^2 / (4 sigma^2)) / sqrt(4 pi sigma^2), units ps.
    """
    dw = np.asarray(d_omega, dtype=np.float64)
    s2 = model.sigma**2
    out = np.exp(-(dw**2) / (4.0 * s2)) / np.sqrt(4.0 * np.pi * s2)
    return out if out.ndim else float(out)


def prob_nonresolved(model: PhotonPairModel, delta_t, delta) -> np.ndarray | float:
    """Outcome probability without frequency resolution.

    P(delta) = (1 + delta * eta^2 * exp(-sigma^2 dt^2)) / 2; the two outcomes
    sum to one for any delay.
    """
    d = _check_delta(delta)
    dt = np.asarray(delta_t, dtype=np.float64)
    out = 0.5 * (1.0 + d * model.eta**2 * np.exp(-((model.sigma * dt) ** 2)))
    return out if out.ndim else float(out)


def prob_freq_resolved(model: PhotonPairModel, delta_t, d_omega, delta) -> np.ndarray | float:
    """Frequency-resolved outcome density (post-selected form), units ps.

    P(delta, dw) = C(dw)/2 * (1 + delta * eta^2 * cos(dw * dt)).  The beat
    term survives arbitrarily far beyond the coherence time, which is what
    extends the usable delay range of the resolved estimator.
    """
    d = _check_delta(delta)
    dw = np.asarray(d_omega, dtype=np.float64)
    dt = np.asarray(delta_t, dtype=np.float64)
    out = 0.5 * joint_spectral_density(model, dw) * (1.0 + d * model.eta**2 * np.cos(dw * dt))
    return out if out.ndim else float(out)


def mean_freq_density(model: PhotonPairModel, mean_freq) -> np.ndarray | float:
    """Density G of the mean frequency W: Gaussian(omega0, sigma^2 / 2)."""
    w = np.asarray(mean_freq, dtype=np.float64)
    s2 = model.sigma**2
    out = np.exp(-((w - model.omega0) ** 2) / s2) / np.sqrt(np.pi * s2)
    return out if out.ndim else float(out)


def prob_joint_full(model: PhotonPairModel, delta_t, mean_freq, d_omega, delta) -> np.ndarray | float:
    """Joint density over (W, dw, delta), units ps^2.

    Factorises exactly as G(W) * prob_freq_resolved(dt, dw, delta): the
    W-dependence is independent of the delay, so recording W adds no delay
    information.
    """
    out = np.asarray(mean_freq_density(model, mean_freq)) * np.asarray(
        prob_freq_resolved(model, delta_t, d_omega, delta)
    )
    return out if out.ndim else float(out)
