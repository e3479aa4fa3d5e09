"""Command-line interface.

Subcommands: simulate, estimate, fisher, sweep, allan, microshift.
Exit codes: 0 success, 2 configuration / usage error, 3 numerical failure
(including an estimator returning a counted failure).

Unit conventions on flags: internal units are ps and rad/ps; --sigma-ghz and
--epsilon-ghz take ordinary frequencies (value = rad/ps * 1000 / 2 pi).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io as hio
from .detector import DEFAULT_EPSILON, BinnedDetectorSpec
from .errors import ConfigError, HomdelayError, QuadratureError
from .estimators import (
    DelayGrid,
    estimate_nonresolved,
    estimate_resolved,
    estimate_resolved_binned,
)
from .fisher import METHOD_BINNED, METHOD_IDEAL, METHOD_NR, build_fisher_curve, qfi
from .harness import (
    EtaTable,
    SweepConfig,
    allan_variance,
    micro_shift_experiment,
    run_sweep,
)
from .model import DEFAULT_OMEGA0, PhotonPairModel
from .sampling import PHYSICAL, POST_SELECTED, SamplerConfig, draw_records

#: Reference temporal bandwidth used when neither --tau-ps nor --sigma-ghz is given.
DEFAULT_TAU_PS = 0.98

PAPER_SCALE_REPEATS = 1000
PAPER_SCALE_MICROSHIFT_SAMPLES = 7_900_000


def sigma_radps_from_ghz(ghz: float) -> float:
    """sigma/2pi in GHz -> sigma in rad/ps."""
    return 2.0 * math.pi * ghz / 1000.0


def ghz_from_radps(radps: float) -> float:
    """rad/ps -> ordinary frequency in GHz."""
    return radps * 1000.0 / (2.0 * math.pi)


def parse_delay_spec(text: str) -> np.ndarray:
    """Parse '6.5' or 'start:stop:step' (stop inclusive up to rounding)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--delay-ps range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"bad --delay-ps range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    return np.array([float(text)])


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (64-bit)")
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--output", type=Path, help="output path (default: stdout)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress notes and report timestamps")


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sigma-ghz", type=float, help="spectral bandwidth sigma/2pi in GHz")
    parser.add_argument("--tau-ps", type=float, help="temporal bandwidth tau in ps")
    parser.add_argument("--eta", type=float, default=1.0, help="indistinguishability in [0,1]")
    parser.add_argument("--gamma", type=float, default=1.0, help="detection efficiency in (0,1]")
    parser.add_argument("--omega0-radps", type=float, default=DEFAULT_OMEGA0,
                        help="central angular frequency, rad/ps")


def _model_from_args(args) -> PhotonPairModel:
    if args.sigma_ghz is not None and args.tau_ps is not None:
        raise ConfigError("--sigma-ghz and --tau-ps are exclusive")
    if args.sigma_ghz is not None:
        sigma = sigma_radps_from_ghz(args.sigma_ghz)
    elif args.tau_ps is not None:
        sigma = 1.0 / (2.0 * args.tau_ps)
    else:
        sigma = 1.0 / (2.0 * DEFAULT_TAU_PS)
    return PhotonPairModel(sigma=sigma, omega0=args.omega0_radps, eta=args.eta, gamma=args.gamma)


def _detector_from_args(args, model) -> BinnedDetectorSpec | None:
    eps_ghz = getattr(args, "epsilon_ghz", None)
    n_max = getattr(args, "n_max", None)
    if eps_ghz is None and n_max is None and not getattr(args, "binned", False):
        return None
    epsilon = DEFAULT_EPSILON if eps_ghz is None else sigma_radps_from_ghz(eps_ghz)
    if n_max is None:
        return BinnedDetectorSpec.for_model(model, epsilon)
    return BinnedDetectorSpec(epsilon=epsilon, n_max=n_max)


def _grid_from_args(args, model, spec=None) -> DelayGrid:
    if args.t_max_ps is None:
        raise ConfigError("--t-max-ps is required for grid-search estimates")
    base = DelayGrid.for_model(model, t_max=args.t_max_ps, t_min=args.t_min_ps, spec=spec)
    return DelayGrid(
        t_min=base.t_min,
        t_max=base.t_max,
        coarse_step=args.coarse_step_ps or base.coarse_step,
        refine_step=args.refine_step_ps or base.refine_step,
        refine_half_width=args.refine_half_width_ps
        or (2.0 * (args.coarse_step_ps or base.coarse_step)),
    )


def _add_grid_flags(parser):
    parser.add_argument("--t-min-ps", type=float, default=0.0)
    parser.add_argument("--t-max-ps", type=float, default=None)
    parser.add_argument("--coarse-step-ps", type=float, default=None)
    parser.add_argument("--refine-step-ps", type=float, default=None)
    parser.add_argument("--refine-half-width-ps", type=float, default=None)


def _emit(args, text: str) -> None:
    if args.output is not None:
        hio.atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)


def _note(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    model = _model_from_args(args)
    spec = _detector_from_args(args, model)
    delays = parse_delay_spec(args.delay_ps)
    if delays.size != 1:
        raise ConfigError("simulate takes a single --delay-ps value")
    cfg = SamplerConfig(
        model=model,
        true_delay=float(delays[0]),
        seed=_seed(args),
        count=args.samples,
        loss_mode=PHYSICAL if args.loss_mode == "physical" else POST_SELECTED,
        binning=spec,
        emit_mean_freq=args.emit_mean_freq,
    )
    records, drops = draw_records(cfg)
    text = hio.records_to_csv(records) if args.format == "csv" else hio.records_to_jsonl(records)
    _emit(args, text)
    _note(args, f"emitted {len(records)} records "
                f"(loss-dropped {drops.loss_dropped}, range-dropped {drops.range_dropped})")
    return 0


def _read_records(path: Path):
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return hio.records_from_jsonl(text)
    return hio.records_from_csv(text)


def cmd_estimate(args) -> int:
    model = _model_from_args(args)
    records = _read_records(args.input)
    method = args.method
    if method == METHOD_NR:
        n_b = int((records.delta == 1).sum())
        result = estimate_nonresolved(n_b, len(records) - n_b, model)
    else:
        if args.t_max_ps is None:
            raise ConfigError("--t-max-ps is required for grid-search estimates")
        if method == METHOD_BINNED:
            spec = _detector_from_args(args, model)
            if spec is None:
                spec = BinnedDetectorSpec.for_model(model, DEFAULT_EPSILON)
            grid = _grid_from_args(args, model, spec)
            result = estimate_resolved_binned(records, model, spec, grid)
        else:
            grid = _grid_from_args(args, model)
            result = estimate_resolved(records, model, grid)
    _emit(args, hio.json_report(result.to_json_dict()))
    return 3 if result.failed else 0


def cmd_fisher(args) -> int:
    model = _model_from_args(args)
    method = args.method_pos or args.method
    if args.method_pos and args.method and args.method_pos != args.method:
        raise ConfigError(
            f"conflicting methods: positional {args.method_pos!r} vs --method {args.method!r}"
        )
    if method is None:
        raise ConfigError("fisher needs a method: qfi, nr, ideal or binned")

    if method == "qfi":
        value = qfi(model)
        if args.format == "json":
            _emit(args, hio.json_report({"qfi_ps^-2": value}))
        else:
            _emit(args, f"{value!r}\n")
        return 0

    if args.delay_ps is None:
        raise ConfigError("--delay-ps is required for fisher curves")
    delays = parse_delay_spec(args.delay_ps)
    spec = None
    if method == METHOD_BINNED:
        spec = _detector_from_args(args, model) or BinnedDetectorSpec.for_model(
            model, DEFAULT_EPSILON
        )
    eta_per_delay = None
    if args.eta_table is not None:
        table = EtaTable(json.loads(Path(args.eta_table).read_text()))
        eta_per_delay = np.array([table(d) for d in delays])
    curve = build_fisher_curve(
        model, delays, method, spec=spec, quad_tol=args.quad_tol,
        eta_per_delay=eta_per_delay, physical_loss=args.physical_loss,
    )
    _emit(args, hio.curve_to_csv(curve) if args.format == "csv" else hio.curve_to_json(curve))
    return 0


def cmd_sweep(args) -> int:
    if args.config is None:
        raise ConfigError("sweep needs --config <json>")
    raw = json.loads(Path(args.config).read_text())
    model_d = raw.get("model", {})
    if "sigma_radps" in model_d:
        sigma = float(model_d["sigma_radps"])
    elif "tau_ps" in model_d:
        sigma = 1.0 / (2.0 * float(model_d["tau_ps"]))
    else:
        raise ConfigError("sweep config model needs sigma_radps or tau_ps")
    model = PhotonPairModel(
        sigma=sigma,
        omega0=float(model_d.get("omega0_radps", DEFAULT_OMEGA0)),
        eta=float(args.eta if args.eta is not None else model_d.get("eta", 1.0)),
        gamma=float(model_d.get("gamma", 1.0)),
    )
    detector = None
    if "detector" in raw:
        d = raw["detector"]
        if "n_max" in d:
            detector = BinnedDetectorSpec(float(d["epsilon_radps"]), int(d["n_max"]))
        else:
            detector = BinnedDetectorSpec.for_model(model, float(d["epsilon_radps"]))
    grid = None
    if "grid" in raw:
        g = raw["grid"]
        grid = DelayGrid(
            t_min=float(g.get("t_min", 0.0)),
            t_max=float(g["t_max"]),
            coarse_step=float(g.get("coarse_step", model.tau / 10.0)),
            refine_step=float(g.get("refine_step", 1e-4)),
            refine_half_width=float(g.get("refine_half_width", model.tau / 5.0)),
        )
    repeats = args.repeats if args.repeats is not None else int(raw.get("repeats", 100))
    if args.paper_scale and args.repeats is None:
        repeats = PAPER_SCALE_REPEATS
    samples = args.samples if args.samples is not None else int(raw.get("samples_per_repeat", 1000))
    config = SweepConfig(
        model=model,
        delays=tuple(float(d) for d in raw["delays_ps"]),
        repeats=repeats,
        samples_per_repeat=samples,
        estimators=tuple(raw.get("estimators", ["nr", "fr"])),
        eta_table=EtaTable(raw["eta_table"]) if "eta_table" in raw else None,
        detector=detector,
        grid=grid,
        seed=args.seed if args.seed is not None else int(raw.get("seed", 0)),
        loss_mode=raw.get("loss_mode", POST_SELECTED),
    )
    report = run_sweep(config)
    if args.format == "json":
        _emit(args, hio.json_report(report.to_json_dict(include_timestamp=not args.quiet)))
    else:
        _emit(args, report.to_csv())
    return 0


def cmd_allan(args) -> int:
    records = _read_records(args.input)
    if args.column == "delta":
        series = records.delta.astype(np.float64)
    elif args.column == "dOmega_radps":
        series = records.d_omega
    elif args.column == "W_radps":
        if records.mean_freq is None:
            raise ConfigError("records have no W_radps column")
        series = records.mean_freq
    else:
        raise ConfigError(f"unknown column {args.column!r}")
    sizes = [int(s) for s in args.clusters.split(",")]
    rows = allan_variance(series, sizes)
    if args.format == "json":
        _emit(args, hio.json_report({"column": args.column,
                                     "points": [{"m": m, "allan_var": v} for m, v in rows]}))
    else:
        lines = ["m,allan_var"] + [f"{m},{v!r}" for m, v in rows]
        _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_microshift(args) -> int:
    model = _model_from_args(args)
    samples = args.samples
    if args.paper_scale and samples is None:
        samples = PAPER_SCALE_MICROSHIFT_SAMPLES
    if samples is None:
        samples = 100_000
    if args.t_max_ps is None:
        args.t_max_ps = args.base_ps + args.shift_ps + 2.0
    grid = _grid_from_args(args, model)
    report = micro_shift_experiment(
        base=args.base_ps,
        shift=args.shift_ps,
        n_samples=samples,
        model=model,
        grid=grid,
        seed=_seed(args),
        trace_points=args.trace_points,
    )
    _emit(args, hio.json_report(report.to_json_dict(include_timestamp=not args.quiet)))
    if report.insufficient_samples:
        _note(args, "note: 3x combined CRB std exceeds the prepared shift; "
                    "increase --samples to resolve it")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homdelay",
        description="Optical delay estimation via frequency-resolved two-photon interference",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a seeded record stream")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--delay-ps", required=True, help="true delay, ps")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--loss-mode", choices=["post_selected", "physical"], default="post_selected")
    p.add_argument("--emit-mean-freq", action="store_true")
    p.add_argument("--epsilon-ghz", type=float, help="bin half-width epsilon/2pi in GHz")
    p.add_argument("--binned", action="store_true",
                   help="bin records with the default resolution")
    p.add_argument("--n-max", type=int, help="top detector bin index")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the delay from a records file")
    _add_common(p)
    _add_model_flags(p)
    _add_grid_flags(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--method", choices=[METHOD_NR, METHOD_IDEAL, METHOD_BINNED], default=METHOD_IDEAL)
    p.add_argument("--epsilon-ghz", type=float)
    p.add_argument("--n-max", type=int)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("fisher", help="evaluate Fisher information / QFI")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("method_pos", nargs="?", choices=["qfi", METHOD_NR, METHOD_IDEAL, METHOD_BINNED],
                   help="qfi | nr | ideal | binned")
    p.add_argument("--method", choices=["qfi", METHOD_NR, METHOD_IDEAL, METHOD_BINNED])
    p.add_argument("--delay-ps", help="single value or start:stop:step")
    p.add_argument("--epsilon-ghz", type=float)
    p.add_argument("--n-max", type=int)
    p.add_argument("--quad-tol", type=float, default=1e-8)
    p.add_argument("--physical-loss", action="store_true",
                   help="apply the gamma^2 prefactor instead of post-selecting")
    p.add_argument("--eta-table", type=Path,
                   help="JSON [[delay_ps, eta], ...] for delay-dependent eta")
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("sweep", help="repeat-sweep experiment from a config file")
    _add_common(p)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--paper-scale", action="store_true",
                   help="full-scale repeats (r=1000) instead of desk scale")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("allan", help="Allan variance of a record-stream column")
    _add_common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--column", default="dOmega_radps",
                   choices=["delta", "dOmega_radps", "W_radps"])
    p.add_argument("--clusters", default="10,100,1000", help="comma-separated cluster sizes")
    p.set_defaults(func=cmd_allan)

    p = sub.add_parser("microshift", help="resolve a small shift between two delays")
    _add_common(p)
    _add_model_flags(p)
    _add_grid_flags(p)
    p.add_argument("--base-ps", type=float, required=True)
    p.add_argument("--shift-ps", type=float, required=True)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--trace-points", type=int, default=8)
    p.add_argument("--paper-scale", action="store_true",
                   help="use the full-scale sample count (7.9e6)")
    p.set_defaults(func=cmd_microshift)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HomdelayError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
