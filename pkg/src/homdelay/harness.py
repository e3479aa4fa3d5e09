"""Experiment orchestration: repeat sweeps, the micro-shift run, stability.

A sweep draws ``repeats`` independent seeded record sets of ``samples`` each
at every requested delay, runs the requested estimators on the same records,
and aggregates accuracy (mean, bias), precision (std, MSE, empirical
metrological information 1/(N var)) and the failure bookkeeping that maps
out each estimator's dynamic range.  Non-resolved failures are excluded
from the moments and reported as a fraction: the fraction itself is the
dynamic-range diagnostic.

Repeat j at delay index i uses the sub-stream seed ``seed + i*repeats + j``,
so any single repeat can be replayed in isolation.
"""

from __future__ import annotations

import datetime as _dt
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .detector import BinnedDetectorSpec, max_unambiguous_delay
from .errors import ConfigError, InsufficientDataError
from .estimators import (
    DelayGrid,
    EstimateResult,
    estimate_nonresolved,
    estimate_resolved,
    estimate_resolved_binned,
)
from .fisher import fisher_nonresolved, fisher_resolved_binned, fisher_resolved_ideal
from .model import PhotonPairModel
from .sampling import POST_SELECTED, SamplerConfig, draw_records

logger = logging.getLogger("homdelay")

EST_NR = "nr"
EST_FR = "fr"
EST_FR_BINNED = "fr_binned"
_KNOWN_ESTIMATORS = (EST_NR, EST_FR, EST_FR_BINNED)


class EtaTable:
    """Delay-dependent indistinguishability from two-column knots.

    Linear interpolation between knots; asking outside the knot range is a
    config error (no extrapolation of measured visibility).
    """

    def __init__(self, knots):
        knots = [(float(d), float(e)) for d, e in knots]
        if len(knots) < 1:
            raise ConfigError("eta table needs at least one knot")
        knots.sort()
        self.delays = np.array([k[0] for k in knots])
        self.etas = np.array([k[1] for k in knots])
        if np.any((self.etas < 0) | (self.etas > 1)):
            raise ConfigError("eta knots must lie in [0, 1]")

    def __call__(self, delay: float) -> float:
        if delay < self.delays[0] - 1e-12 or delay > self.delays[-1] + 1e-12:
            raise ConfigError(
                f"delay {delay} outside eta table range "
                f"[{self.delays[0]}, {self.delays[-1]}]"
            )
        return float(np.interp(delay, self.delays, self.etas))

    def to_knots(self) -> list[list[float]]:
        return [[float(d), float(e)] for d, e in zip(self.delays, self.etas)]


@dataclass(frozen=True)
class SweepConfig:
    """One repeat-sweep experiment over a list of prepared delays."""

    model: PhotonPairModel
    delays: tuple
    repeats: int
    samples_per_repeat: int
    estimators: tuple = (EST_NR, EST_FR)
    eta_table: EtaTable | None = None
    detector: BinnedDetectorSpec | None = None
    grid: DelayGrid | None = None
    seed: int = 0
    loss_mode: str = POST_SELECTED
    emit_mean_freq: bool = False

    def __post_init__(self):
        if self.repeats < 1 or self.samples_per_repeat < 1:
            raise ConfigError("repeats and samples_per_repeat must be >= 1")
        if list(self.delays) != sorted(self.delays):
            raise ConfigError("delays must be sorted ascending")
        for est in self.estimators:
            if est not in _KNOWN_ESTIMATORS:
                raise ConfigError(f"unknown estimator {est!r}")
        if EST_FR_BINNED in self.estimators and self.detector is None:
            raise ConfigError("fr_binned estimator needs a detector spec")
        if self.eta_table is not None:
            for d in self.delays:
                self.eta_table(d)  # raises if not covered


@dataclass
class SweepPoint:
    """Aggregated statistics for one (delay, estimator) cell."""

    delay_ps: float
    estimator: str
    eta_used: float
    n_repeats: int
    n_success: int
    failure_fraction: float
    mean_ps: float | None = None
    std_ps: float | None = None
    bias_ps: float | None = None
    mse_ps2: float | None = None
    f_exp: float | None = None
    crb_var_ps2: float | None = None
    crb_std_ps: float | None = None
    failure_counts: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items()}
        return out


@dataclass
class SweepReport:
    config: dict
    points: list
    mse_ratio: dict

    def to_json_dict(self, include_timestamp: bool = True) -> dict:
        out = {
            "config": self.config,
            "points": [p.to_json_dict() for p in self.points],
            "mse_ratio_nr_over_fr": self.mse_ratio,
        }
        if include_timestamp:
            out["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        return out

    def to_csv(self) -> str:
        cols = [
            "delay_ps", "estimator", "eta_used", "n_repeats", "n_success",
            "failure_fraction", "mean_ps", "std_ps", "bias_ps", "mse_ps2",
            "f_exp", "crb_var_ps2", "crb_std_ps",
        ]
        lines = [",".join(cols)]
        for p in self.points:
            row = []
            for c in cols:
                v = getattr(p, c)
                row.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def point(self, delay: float, estimator: str) -> SweepPoint:
        for p in self.points:
            if p.estimator == estimator and abs(p.delay_ps - delay) < 1e-12:
                return p
        raise KeyError(f"no point for delay {delay}, estimator {estimator}")


def _default_grid(config: SweepConfig) -> DelayGrid:
    t_max = 1.2 * max(config.delays) + 5.0 * config.model.tau
    spec = config.detector if EST_FR_BINNED in config.estimators else None
    return DelayGrid.for_model(config.model, t_max=t_max, spec=spec)


def _aggregate(delay, name, eta_used, estimates, n_samples, fisher_per_sample) -> SweepPoint:
    values = np.array([e.value for e in estimates if not e.failed])
    failures = [e.failure_reason for e in estimates if e.failed]
    counts: dict = {}
    for reason in failures:
        counts[reason] = counts.get(reason, 0) + 1
    n_rep = len(estimates)
    point = SweepPoint(
        delay_ps=float(delay),
        estimator=name,
        eta_used=float(eta_used),
        n_repeats=n_rep,
        n_success=int(values.size),
        failure_fraction=float(len(failures) / n_rep),
        failure_counts=counts,
    )
    if values.size >= 1:
        point.mean_ps = float(values.mean())
        point.bias_ps = float(point.mean_ps - delay)
    if values.size >= 2:
        var = float(values.var(ddof=1))
        point.std_ps = float(np.sqrt(var))
        point.mse_ps2 = point.bias_ps**2 + var
        if point.failure_fraction < 0.5 and var > 0:
            point.f_exp = 1.0 / (n_samples * var)
    if fisher_per_sample is not None and fisher_per_sample > 0:
        point.crb_var_ps2 = 1.0 / (n_samples * fisher_per_sample)
        point.crb_std_ps = float(np.sqrt(point.crb_var_ps2))
    return point


def run_sweep(config: SweepConfig) -> SweepReport:
    """Run the repeat sweep and aggregate per-(delay, estimator) statistics."""
    grid = config.grid or _default_grid(config)
    detector = config.detector
    if detector is not None and max(config.delays) > 0.1 * max_unambiguous_delay(detector):
        logger.warning(
            "scanning delays beyond 0.1/epsilon = %.3g ps; estimates may alias",
            0.1 * max_unambiguous_delay(detector),
        )

    n = config.samples_per_repeat
    points: list[SweepPoint] = []
    for i, delay in enumerate(config.delays):
        eta_i = config.eta_table(delay) if config.eta_table is not None else config.model.eta
        model_i = replace(config.model, eta=eta_i)
        results: dict[str, list[EstimateResult]] = {name: [] for name in config.estimators}
        binning = detector if EST_FR_BINNED in config.estimators else None
        for j in range(config.repeats):
            sampler = SamplerConfig(
                model=model_i,
                true_delay=float(delay),
                seed=config.seed + i * config.repeats + j,
                count=n,
                loss_mode=config.loss_mode,
                binning=binning,
                emit_mean_freq=config.emit_mean_freq,
            )
            records, _ = draw_records(sampler)
            for name in config.estimators:
                if name == EST_NR:
                    n_b = int((records.delta == 1).sum())
                    results[name].append(estimate_nonresolved(n_b, len(records) - n_b, model_i))
                elif name == EST_FR:
                    results[name].append(estimate_resolved(records, model_i, grid))
                else:
                    results[name].append(
                        estimate_resolved_binned(records, model_i, detector, grid)
                    )
        for name in config.estimators:
            if name == EST_NR:
                fisher = float(fisher_nonresolved(model_i, delay))
            elif name == EST_FR:
                fisher = fisher_resolved_ideal(model_i, float(delay))
            else:
                fisher = fisher_resolved_binned(model_i, detector, float(delay))
            points.append(_aggregate(delay, name, eta_i, results[name], n, fisher))

    report = SweepReport(config=_config_dict(config, grid), points=points, mse_ratio={})
    if EST_NR in config.estimators and EST_FR in config.estimators:
        for delay in config.delays:
            nr = report.point(delay, EST_NR)
            fr = report.point(delay, EST_FR)
            if nr.mse_ps2 is not None and fr.mse_ps2 is not None and fr.mse_ps2 > 0:
                report.mse_ratio[repr(float(delay))] = nr.mse_ps2 / fr.mse_ps2
    return report


def _config_dict(config: SweepConfig, grid: DelayGrid) -> dict:
    m = config.model
    out = {
        "model": {"sigma_radps": m.sigma, "omega0_radps": m.omega0, "eta": m.eta, "gamma": m.gamma},
        "delays_ps": [float(d) for d in config.delays],
        "repeats": config.repeats,
        "samples_per_repeat": config.samples_per_repeat,
        "estimators": list(config.estimators),
        "seed": config.seed,
        "loss_mode": config.loss_mode,
        "grid": {
            "t_min": grid.t_min,
            "t_max": grid.t_max,
            "coarse_step": grid.coarse_step,
            "refine_step": grid.refine_step,
            "refine_half_width": grid.refine_half_width,
            "domain": "delta_t >= 0 (likelihood is even in delta_t)",
        },
    }
    if config.eta_table is not None:
        out["eta_table"] = config.eta_table.to_knots()
    if config.detector is not None:
        out["detector"] = {"epsilon_radps": config.detector.epsilon, "n_max": config.detector.n_max}
    return out


@dataclass
class MicroShiftReport:
    """Result of resolving a tiny shift between two prepared delays."""

    base_ps: float
    shift_true_ps: float
    n_samples: int
    estimate_base_ps: float
    estimate_shifted_ps: float
    shift_estimate_ps: float
    crb_std_ps: float
    combined_std_ps: float
    insufficient_samples: bool
    trace: list = field(default_factory=list)

    def to_json_dict(self, include_timestamp: bool = True) -> dict:
        out = {
            "base_ps": self.base_ps,
            "shift_true_ps": self.shift_true_ps,
            "n_samples": self.n_samples,
            "estimate_base_ps": self.estimate_base_ps,
            "estimate_shifted_ps": self.estimate_shifted_ps,
            "shift_estimate_ps": self.shift_estimate_ps,
            "crb_std_ps": self.crb_std_ps,
            "combined_std_ps": self.combined_std_ps,
            "insufficient_samples": self.insufficient_samples,
            "trace": self.trace,
        }
        if include_timestamp:
            out["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        return out


def micro_shift_experiment(
    base: float,
    shift: float,
    n_samples: int,
    model: PhotonPairModel,
    grid: DelayGrid,
    seed: int = 0,
    trace_points: int = 8,
) -> MicroShiftReport:
    """Estimate two nearby delays and report the recovered shift.

    The per-estimate uncertainty is the Cramer-Rao std at the base delay;
    the shift uncertainty is sqrt(2) of that.  When three combined standard
    deviations exceed the prepared shift the report flags the sample count
    as insufficient.  A cumulative-estimate trace (estimate vs number of
    samples used, geometric checkpoints) is included for plotting.
    """
    if shift < 0:
        raise ConfigError("shift must be >= 0")
    if base <= 0:
        raise ConfigError("base delay must be > 0")
    rec_base, _ = draw_records(
        SamplerConfig(model=model, true_delay=base, seed=seed, count=n_samples)
    )
    rec_shift, _ = draw_records(
        SamplerConfig(model=model, true_delay=base + shift, seed=seed + 1, count=n_samples)
    )
    est_base = estimate_resolved(rec_base, model, grid)
    est_shift = estimate_resolved(rec_shift, model, grid)

    fisher = fisher_resolved_ideal(model, base)
    crb_std = 1.0 / np.sqrt(n_samples * fisher)
    combined = float(np.sqrt(2.0) * crb_std)

    trace = []
    if trace_points > 0:
        checkpoints = sorted({max(1, n_samples // 2**k) for k in range(trace_points, 0, -1)})
        for m in checkpoints:
            if m >= n_samples:
                continue
            eb = estimate_resolved(rec_base.subset(m), model, grid)
            es = estimate_resolved(rec_shift.subset(m), model, grid)
            trace.append(
                {"n": int(m), "estimate_base_ps": eb.value, "estimate_shifted_ps": es.value}
            )
        trace.append(
            {
                "n": int(n_samples),
                "estimate_base_ps": est_base.value,
                "estimate_shifted_ps": est_shift.value,
            }
        )

    return MicroShiftReport(
        base_ps=float(base),
        shift_true_ps=float(shift),
        n_samples=int(n_samples),
        estimate_base_ps=est_base.value,
        estimate_shifted_ps=est_shift.value,
        shift_estimate_ps=est_shift.value - est_base.value,
        crb_std_ps=float(crb_std),
        combined_std_ps=combined,
        insufficient_samples=bool(shift > 0 and 3.0 * combined > shift),
        trace=trace,
    )


def allan_variance(series, cluster_sizes) -> list[tuple[int, float]]:
    """Two-sample (Allan) variance of disjoint cluster means.

    For cluster length m, with M = floor(N/m) cluster means y_j,
    sigma_y^2(m) = sum_{j<M-1} (y_{j+1} - y_j)^2 / (2 (M - 1)).  White noise
    of variance v gives v/m; a flat-then-rising curve flags drift.
    """
    y = np.asarray(series, dtype=np.float64)
    out = []
    for m in cluster_sizes:
        m = int(m)
        if m < 1:
            raise ConfigError(f"cluster size must be >= 1, got {m}")
        big_m = y.size // m
        if big_m < 2:
            raise InsufficientDataError(
                f"need at least 2 clusters of length {m}, have {y.size} samples"
            )
        means = y[: big_m * m].reshape(big_m, m).mean(axis=1)
        out.append((m, float(np.sum(np.diff(means) ** 2) / (2.0 * (big_m - 1)))))
    return out
