"""Adaptive panel quadrature for smooth, possibly oscillatory integrands.

Gauss-Legendre rules of two orders are evaluated on every panel; the
difference is the panel error estimate.  Panels whose error exceeds their
share of the budget are bisected until the total estimated error meets the
requested tolerance.  An initial maximum panel width lets callers keep
oscillations (period 2 pi / delta_t in the beat integrals) resolved from the
start instead of relying on subdivision to discover them.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureError

_LOW_ORDER = 10
_HIGH_ORDER = 21


@lru_cache(maxsize=8)
def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    # map from [-1, 1] to [0, 1]
    return (x + 1.0) / 2.0, w / 2.0


def adaptive_quad(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
    max_panel_width: float | None = None,
    max_panels: int = 65536,
) -> tuple[float, float]:
    """Integrate vectorised ``f`` over [a, b].

    Returns (value, error_estimate).  Raises QuadratureError when the error
    budget cannot be met within ``max_panels`` panels.
    """
    if b <= a:
        raise QuadratureError(f"empty or inverted interval [{a}, {b}]")
    width = b - a
    if max_panel_width is not None and max_panel_width > 0:
        n0 = int(np.ceil(width / max_panel_width))
    else:
        n0 = 8
    n0 = max(4, min(n0, max_panels))
    starts = a + width * np.arange(n0) / n0
    widths = np.full(n0, width / n0)

    xs_lo, ws_lo = _gl_nodes(_LOW_ORDER)
    xs_hi, ws_hi = _gl_nodes(_HIGH_ORDER)

    for _ in range(64):
        nodes_lo = starts[:, None] + widths[:, None] * xs_lo[None, :]
        nodes_hi = starts[:, None] + widths[:, None] * xs_hi[None, :]
        i_lo = (f(nodes_lo.ravel()).reshape(nodes_lo.shape) * ws_lo).sum(axis=1) * widths
        i_hi = (f(nodes_hi.ravel()).reshape(nodes_hi.shape) * ws_hi).sum(axis=1) * widths
        err = np.abs(i_hi - i_lo)
        total = float(i_hi.sum())
        budget = max(abs_tol, rel_tol * abs(total))
        total_err = float(err.sum())
        if total_err <= budget or budget == 0 and total_err == 0:
            return total, total_err
        # bisect every panel holding more than its share of the budget
        bad = err > budget / (2.0 * len(starts))
        if not bad.any():
            bad = err >= err.max()
        if len(starts) + bad.sum() > max_panels:
            raise QuadratureError(
                f"tolerance {rel_tol:g} not met with {len(starts)} panels "
                f"(estimated error {total_err:g}, budget {budget:g})"
            )
        keep_s, keep_w = starts[~bad], widths[~bad]
        half = widths[bad] / 2.0
        starts = np.concatenate([keep_s, starts[bad], starts[bad] + half])
        widths = np.concatenate([keep_w, half, half])

    raise QuadratureError(f"tolerance {rel_tol:g} not met after maximum refinement depth")
