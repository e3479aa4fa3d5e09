"""File formats: record streams (CSV / JSON-lines), Fisher curves, reports.

Column schemas are fixed and golden-tested:

    records:  delta,dOmega_radps,W_radps,bin
    curves:   delta_t_ps,fisher_ps^-2,method,eta,epsilon_radps

Optional record fields are written as empty CSV cells (omitted in JSONL).
Floats are rendered with shortest round-trip repr so identical data gives
byte-identical files.  All writes are atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fisher import FisherCurve
from .model import Records

RECORD_HEADER = "delta,dOmega_radps,W_radps,bin"
CURVE_HEADER = "delta_t_ps,fisher_ps^-2,method,eta,epsilon_radps"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def records_to_csv(records: Records) -> str:
    lines = [RECORD_HEADER]
    w = records.mean_freq
    b = records.bin_index
    for i in range(len(records)):
        lines.append(
            f"{int(records.delta[i])},{_fmt(records.d_omega[i])},"
            f"{'' if w is None else _fmt(w[i])},{'' if b is None else int(b[i])}"
        )
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> Records:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != RECORD_HEADER:
        raise ConfigError(f"bad records header; expected {RECORD_HEADER!r}")
    delta, d_omega, mean_freq, bins = [], [], [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ConfigError(f"bad records row: {ln!r}")
        delta.append(int(parts[0]))
        d_omega.append(float(parts[1]))
        mean_freq.append(None if parts[2] == "" else float(parts[2]))
        bins.append(None if parts[3] == "" else int(parts[3]))
    return Records(
        np.array(delta),
        np.array(d_omega),
        _dense_or_none(mean_freq, float),
        _dense_or_none(bins, int),
    )


def _dense_or_none(values: list, cast):
    present = [v is not None for v in values]
    if not any(present):
        return None
    if not all(present):
        raise ConfigError("mixed present/absent optional column in records file")
    return np.array([cast(v) for v in values])


def records_to_jsonl(records: Records) -> str:
    lines = []
    for i in range(len(records)):
        row: dict = {"delta": int(records.delta[i]), "dOmega_radps": float(records.d_omega[i])}
        if records.mean_freq is not None:
            row["W_radps"] = float(records.mean_freq[i])
        if records.bin_index is not None:
            row["bin"] = int(records.bin_index[i])
        lines.append(json.dumps(row, sort_keys=True))
    return "\n".join(lines) + "\n"


def records_from_jsonl(text: str) -> Records:
    delta, d_omega, mean_freq, bins = [], [], [], []
    for ln in text.splitlines():
        if not ln.strip():
            continue
        row = json.loads(ln)
        delta.append(int(row["delta"]))
        d_omega.append(float(row["dOmega_radps"]))
        mean_freq.append(row.get("W_radps"))
        bins.append(row.get("bin"))
    if not delta:
        raise ConfigError("empty records file")
    return Records(
        np.array(delta),
        np.array(d_omega),
        _dense_or_none(mean_freq, float),
        _dense_or_none(bins, int),
    )


def curve_to_csv(curve: FisherCurve) -> str:
    lines = [CURVE_HEADER]
    eps = "" if curve.epsilon is None else _fmt(curve.epsilon)
    for t, f, eta in zip(curve.delta_t, curve.fisher, curve.eta_used):
        lines.append(f"{_fmt(t)},{_fmt(f)},{curve.method},{_fmt(eta)},{eps}")
    return "\n".join(lines) + "\n"


def curve_to_json(curve: FisherCurve) -> str:
    rows = [
        {
            "delta_t_ps": float(t),
            "fisher_ps^-2": float(f),
            "method": curve.method,
            "eta": float(eta),
            "epsilon_radps": curve.epsilon,
        }
        for t, f, eta in zip(curve.delta_t, curve.fisher, curve.eta_used)
    ]
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def json_report(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
