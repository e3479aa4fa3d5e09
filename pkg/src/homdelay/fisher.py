"""Precision bounds: Fisher information curves and Cramer-Rao bounds.

Three per-sample information quantities for the delay, all in ps^-2:

* ``qfi``: the measurement-independent ceiling 2 sigma^2 = 1/(2 tau^2).
* ``fisher_nonresolved``: the bucket-detector information, which peaks near
  one coherence time and then collapses exponentially.
* ``fisher_resolved_ideal``: the infinite-resolution information
  eta^4 * integral C(dw) dw^2 sin^2(dw dt) / (1 - eta^4 cos^2(dw dt)) d dw,
  obtained from the expected squared score of the resolved density.  At
  eta = 1 it equals the ceiling for every nonzero delay.
* ``fisher_resolved_binned``: the finite-resolution sum over detector bins,
  F_n = eta^4 D_n^2 (1/P_n+ + 1/P_n-), with the derivative integral D_n
  evaluated analytically under the integral sign (no finite differences).

Detection efficiency multiplies the resolved quantities as gamma^2 only in
physical-loss mode; the default is post-selected accounting.

The Cramer-Rao bound converts per-sample information into the best
attainable estimator variance, var >= 1 / (N * F).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .detector import BinnedDetectorSpec, _bin_outcome_tables
from .errors import ConfigError, DomainError, QuadratureError
from .model import PhotonPairModel, joint_spectral_density
from .quadrature import adaptive_quad

METHOD_NR = "nr"
METHOD_IDEAL = "ideal"
METHOD_BINNED = "binned"

_DOMAIN_SIGMAS = 8.0  # quadrature domain half-width in units of sqrt(2)*sigma


def qfi(model: PhotonPairModel) -> float:
    """Quantum Fisher information 2 sigma^2 = 1/(2 tau^2), ps^-2."""
    return 2.0 * model.sigma**2


def fisher_nonresolved(model: PhotonPairModel, delta_t) -> np.ndarray | float:
    """Eq.-of-motion of the non-resolved scheme: with u = dt^2 / (2 tau^2),

        F = eta^4 * QFI * u * exp(-u) / (1 - eta^4 exp(-u)),

    evaluated in the overflow-safe exp(-u) form.  At dt = 0 the analytic
    limit is QFI for eta = 1 and zero otherwise.
    """
    dt = np.asarray(delta_t, dtype=np.float64)
    u = 2.0 * (model.sigma * dt) ** 2
    e4 = model.eta**4
    h = qfi(model)
    eu = np.exp(-u)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(u == 0.0, h if e4 == 1.0 else 0.0, e4 * h * u * eu / (1.0 - e4 * eu))
    return out if out.ndim else float(out)


def _score_ratio(phase: np.ndarray, eta: float) -> np.ndarray:
    """sin^2(x) / (1 - eta^4 cos^2(x)) in a cancellation-free factorised form.

    1 - eta^2 cos x = (1 - eta^2) + 2 eta^2 sin^2(x/2) and likewise with
    cos^2(x/2) for the + branch, so the eta = 1 removable singularities at
    beat nodes stay finite; the denominator is floored at 1e-12.
    """
    e2 = eta**2
    s2 = np.sin(phase / 2.0) ** 2
    c2 = np.cos(phase / 2.0) ** 2
    num = 4.0 * s2 * c2
    den = ((1.0 - e2) + 2.0 * e2 * s2) * ((1.0 - e2) + 2.0 * e2 * c2)
    return num / np.maximum(den, 1e-12)


def fisher_resolved_ideal(
    model: PhotonPairModel,
    delta_t: float,
    quad_tol: float = 1e-8,
    physical_loss: bool = False,
) -> float:
    """Ideal (infinite-resolution) Fisher information at one delay, ps^-2.

    Adaptive quadrature over |d_omega| <= 8 sqrt(2) sigma with oscillation-
    aware panels no wider than pi / (4 dt).  Raises QuadratureError if the
    requested relative tolerance cannot be met.
    """
    dt = float(delta_t)
    if model.eta == 0.0 or dt == 0.0:
        return 0.0
    upper = _DOMAIN_SIGMAS * math.sqrt(2.0) * model.sigma
    max_width = upper / 8.0
    if dt > 0:
        max_width = min(max_width, math.pi / (4.0 * dt))

    def integrand(w):
        return joint_spectral_density(model, w) * w**2 * _score_ratio(w * dt, model.eta)

    value, _ = adaptive_quad(integrand, 0.0, upper, rel_tol=quad_tol, max_panel_width=max_width)
    out = model.eta**4 * 2.0 * value
    if physical_loss:
        out *= model.gamma**2
    return out


def _binned_fisher_terms(model, spec, delta_t, n_nodes):
    p_plus, p_minus, d = _bin_outcome_tables(model, spec, delta_t, n_nodes)
    e4 = model.eta**4
    with np.errstate(divide="ignore", invalid="ignore"):
        per_bin = e4 * d**2 * (1.0 / p_plus + 1.0 / p_minus)
    per_bin = np.where(d == 0.0, 0.0, per_bin)
    return per_bin


def fisher_resolved_binned_per_bin(
    model: PhotonPairModel,
    spec: BinnedDetectorSpec,
    delta_t: float,
    quad_tol: float = 1e-8,
    physical_loss: bool = False,
) -> np.ndarray:
    """Per-bin contributions F_n(delta_t); their sum is the binned total.

    The node count of the per-piece Gauss rule is doubled until the total
    changes by less than quad_tol (relative); diagnostics callers can see
    which bins still carry information at a given delay.
    """
    spec.validate_coverage(model)
    dt = float(delta_t)
    per_bin = _binned_fisher_terms(model, spec, dt, 24)
    for n_nodes in (48, 96):
        refined = _binned_fisher_terms(model, spec, dt, n_nodes)
        scale = max(refined.sum(), per_bin.sum(), 1e-300)
        if abs(refined.sum() - per_bin.sum()) <= quad_tol * scale:
            per_bin = refined
            break
        per_bin = refined
    else:
        raise QuadratureError(
            f"binned Fisher quadrature did not reach relative tolerance {quad_tol:g}"
        )
    if physical_loss:
        per_bin = per_bin * model.gamma**2
    return per_bin


def fisher_resolved_binned(
    model: PhotonPairModel,
    spec: BinnedDetectorSpec,
    delta_t: float,
    quad_tol: float = 1e-8,
    physical_loss: bool = False,
) -> float:
    """Finite-resolution Fisher information: sum of all bin contributions."""
    return float(
        fisher_resolved_binned_per_bin(model, spec, delta_t, quad_tol, physical_loss).sum()
    )


@dataclass(frozen=True)
class CrbReport:
    """Cramer-Rao bound for N independent samples at a given information."""

    fisher_per_sample: float
    sample_count: int
    bound: float       # variance bound, ps^2
    bound_std: float   # sqrt(bound), ps


def crb(fisher_per_sample: float, sample_count: int) -> CrbReport:
    if not fisher_per_sample > 0:
        raise DomainError(f"fisher information must be > 0, got {fisher_per_sample}")
    if sample_count < 1:
        raise DomainError(f"sample count must be >= 1, got {sample_count}")
    bound = 1.0 / (sample_count * fisher_per_sample)
    return CrbReport(fisher_per_sample, sample_count, bound, math.sqrt(bound))


@dataclass
class FisherCurve:
    """Tabulated F(delta_t) with its method tag and quadrature diagnostics."""

    method: str
    delta_t: np.ndarray
    fisher: np.ndarray
    eta_used: np.ndarray
    quad_tol: float
    epsilon: float | None = None

    def __post_init__(self):
        self.delta_t = np.asarray(self.delta_t, dtype=np.float64)
        self.fisher = np.asarray(self.fisher, dtype=np.float64)
        self.eta_used = np.asarray(self.eta_used, dtype=np.float64)
        if self.method not in (METHOD_NR, METHOD_IDEAL, METHOD_BINNED):
            raise ConfigError(f"unknown method {self.method!r}")
        if np.any(self.fisher < 0):
            raise ConfigError("Fisher curve has negative points")


def build_fisher_curve(
    model: PhotonPairModel,
    delays,
    method: str,
    spec: BinnedDetectorSpec | None = None,
    quad_tol: float = 1e-8,
    eta_per_delay=None,
    physical_loss: bool = False,
) -> FisherCurve:
    """Evaluate one of the three information curves on a delay grid.

    ``eta_per_delay`` optionally replaces the model's indistinguishability
    point by point (measured visibility falls with delay on real hardware).
    Every point is checked against the ceiling QFI * (1 + quad_tol).
    """
    delays = np.asarray(delays, dtype=np.float64)
    if eta_per_delay is None:
        etas = np.full(delays.shape, model.eta)
    else:
        etas = np.asarray(eta_per_delay, dtype=np.float64)
        if etas.shape != delays.shape:
            raise ConfigError("eta_per_delay must match delays in length")
    if method == METHOD_BINNED and spec is None:
        raise ConfigError("binned method needs a detector spec")

    values = np.empty(delays.shape)
    for i, (dt, eta) in enumerate(zip(delays, etas)):
        m = model if eta == model.eta else replace(model, eta=float(eta))
        if method == METHOD_NR:
            values[i] = fisher_nonresolved(m, dt)
        elif method == METHOD_IDEAL:
            values[i] = fisher_resolved_ideal(m, dt, quad_tol, physical_loss)
        else:
            values[i] = fisher_resolved_binned(m, spec, dt, quad_tol, physical_loss)

    ceiling = qfi(model) * (1.0 + max(quad_tol, 1e-9))
    if np.any(values > ceiling):
        raise QuadratureError("Fisher curve exceeds the quantum ceiling beyond tolerance")
    return FisherCurve(
        method=method,
        delta_t=delays,
        fisher=values,
        eta_used=etas,
        quad_tol=quad_tol,
        epsilon=None if spec is None else spec.epsilon,
    )
