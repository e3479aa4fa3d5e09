"""Hot likelihood kernels: numba-jitted with a pure-numpy fallback.

The grid-search estimators evaluate sums of per-record log probabilities
over thousands of delay values; that double loop dominates the runtime of
every Monte Carlo experiment.  Two implementations are provided:

* numba (default): record-outer loop whose inner sweep over an evenly
  spaced delay grid advances cos(w * t_k) by a two-term recurrence and
  accumulates running products, deferring the expensive log to once per
  ~700 factors.  About 2 ns per (record, grid point) on one core.
* numpy: chunked broadcast evaluation, used when numba is unavailable or
  when HOMDELAY_BACKEND=numpy is set.

Set HOMDELAY_BACKEND to "numba" or "numpy" to force a backend;
HOMDELAY_THREADS caps numba's thread pool (0 or unset = automatic).
benchmarks/bench_backends.py compares the two.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigError

_RENORM = 1e-280  # running-product refresh threshold, well above underflow

_backend_name: str | None = None
_numba_fns: dict | None = None


def backend_name() -> str:
    """Resolve the active backend once ('numba' or 'numpy')."""
    global _backend_name
    if _backend_name is None:
        requested = os.environ.get("HOMDELAY_BACKEND", "").strip().lower()
        if requested not in ("", "numba", "numpy"):
            raise ConfigError(f"HOMDELAY_BACKEND must be 'numba' or 'numpy', got {requested!r}")
        if requested == "numpy":
            _backend_name = "numpy"
        else:
            try:
                _get_numba_fns()
                _backend_name = "numba"
            except ImportError:
                if requested == "numba":
                    raise ConfigError("HOMDELAY_BACKEND=numba but numba is not importable")
                _backend_name = "numpy"
    return _backend_name


def _get_numba_fns() -> dict:
    global _numba_fns
    if _numba_fns is not None:
        return _numba_fns
    import numba
    from numba import njit

    threads = int(os.environ.get("HOMDELAY_THREADS", "0") or "0")
    if threads > 0:
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))

    @njit(cache=True, fastmath=True)
    def loglik_uniform(d_omega, delta_sign, eta2, t0, step, n_grid, floor_p):
        out = np.zeros(n_grid)
        acc = np.ones(n_grid)
        for i in range(d_omega.size):
            w = d_omega[i]
            s = eta2 * delta_sign[i]
            c_prev = np.cos(w * (t0 - step))
            c_cur = np.cos(w * t0)
            two_cb = 2.0 * np.cos(w * step)
            for k in range(n_grid):
                p = 0.5 * (1.0 + s * c_cur)
                if p < floor_p:
                    p = floor_p
                acc[k] *= p
                if acc[k] < _RENORM:
                    out[k] += np.log(acc[k])
                    acc[k] = 1.0
                c_next = two_cb * c_cur - c_prev
                c_prev = c_cur
                c_cur = c_next
        for k in range(n_grid):
            out[k] += np.log(acc[k])
        return out

    @njit(cache=True, fastmath=True)
    def loglik_points(d_omega, delta_sign, eta2, t_values, floor_p):
        out = np.empty(t_values.size)
        for k in range(t_values.size):
            t = t_values[k]
            total = 0.0
            for i in range(d_omega.size):
                p = 0.5 * (1.0 + eta2 * delta_sign[i] * np.cos(d_omega[i] * t))
                if p < floor_p:
                    p = floor_p
                total += np.log(p)
            out[k] = total
        return out

    @njit(cache=True, fastmath=True)
    def binned_loglik_uniform(node_omega, node_coeff, bin_ptr, a_n,
                              counts_b, counts_c, eta2, t0, step, n_grid, floor_p):
        n_bins = a_n.size
        out = np.zeros(n_grid)
        beat = np.empty(n_grid)
        for n in range(n_bins):
            cb = counts_b[n]
            cc = counts_c[n]
            if cb == 0.0 and cc == 0.0:
                continue
            for k in range(n_grid):
                beat[k] = 0.0
            for idx in range(bin_ptr[n], bin_ptr[n + 1]):
                w = node_omega[idx]
                coeff = node_coeff[idx]
                c_prev = np.cos(w * (t0 - step))
                c_cur = np.cos(w * t0)
                two_cb = 2.0 * np.cos(w * step)
                for k in range(n_grid):
                    beat[k] += coeff * c_cur
                    c_next = two_cb * c_cur - c_prev
                    c_prev = c_cur
                    c_cur = c_next
            half_a = 0.5 * a_n[n]
            for k in range(n_grid):
                pp = half_a + 0.5 * eta2 * beat[k]
                pm = half_a - 0.5 * eta2 * beat[k]
                if pp < floor_p:
                    pp = floor_p
                if pm < floor_p:
                    pm = floor_p
                out[k] += cb * np.log(pp) + cc * np.log(pm)
        return out

    _numba_fns = {
        "loglik_uniform": loglik_uniform,
        "loglik_points": loglik_points,
        "binned_loglik_uniform": binned_loglik_uniform,
    }
    return _numba_fns


def _loglik_points_numpy(d_omega, delta_sign, eta2, t_values, floor_p, chunk=64):
    out = np.empty(t_values.size)
    scaled = delta_sign * eta2
    for a in range(0, t_values.size, chunk):
        tt = t_values[a : a + chunk]
        p = 0.5 * (1.0 + scaled[None, :] * np.cos(np.outer(tt, d_omega)))
        out[a : a + chunk] = np.log(np.maximum(p, floor_p)).sum(axis=1)
    return out


def _binned_loglik_numpy(node_omega, node_coeff, bin_ptr, a_n, counts_b, counts_c,
                         eta2, t_values, floor_p, chunk=128):
    out = np.empty(t_values.size)
    occupied = (counts_b + counts_c) > 0
    for a in range(0, t_values.size, chunk):
        tt = t_values[a : a + chunk]
        cosmat = np.cos(np.outer(tt, node_omega)) * node_coeff[None, :]
        beat = np.add.reduceat(cosmat, bin_ptr[:-1], axis=1)
        pp = np.maximum(0.5 * (a_n[None, :] + eta2 * beat), floor_p)
        pm = np.maximum(0.5 * (a_n[None, :] - eta2 * beat), floor_p)
        ll = np.log(pp[:, occupied]) @ counts_b[occupied]
        ll += np.log(pm[:, occupied]) @ counts_c[occupied]
        out[a : a + chunk] = ll
    return out


def loglik_uniform_grid(d_omega, delta_sign, eta2, t0, step, n_grid, floor_p):
    """Sum of log[(1 + delta*eta^2*cos(w t))/2] at t = t0 + k*step, k < n_grid."""
    if n_grid < 1 or step <= 0:
        raise ConfigError("grid must have step > 0 and at least one point")
    if backend_name() == "numba":
        return _get_numba_fns()["loglik_uniform"](
            d_omega, delta_sign, eta2, t0, step, n_grid, floor_p
        )
    t_values = t0 + step * np.arange(n_grid)
    return _loglik_points_numpy(d_omega, delta_sign, eta2, t_values, floor_p)


def loglik_points(d_omega, delta_sign, eta2, t_values, floor_p):
    """Same sum at arbitrary delay values."""
    t_values = np.asarray(t_values, dtype=np.float64)
    if backend_name() == "numba":
        return _get_numba_fns()["loglik_points"](d_omega, delta_sign, eta2, t_values, floor_p)
    return _loglik_points_numpy(d_omega, delta_sign, eta2, t_values, floor_p)


def binned_loglik_uniform_grid(node_omega, node_coeff, bin_ptr, a_n, counts_b,
                               counts_c, eta2, t0, step, n_grid, floor_p):
    """Binned log-likelihood sum_n [cb_n log P(n,+) + cc_n log P(n,-)] on a grid.

    Bin probabilities are reconstructed from precomputed quadrature nodes:
    P(n, +/-)(t) = (a_n +/- eta^2 * sum_q coeff_q cos(w_q t)) / 2 with the
    node list of bin n at bin_ptr[n]:bin_ptr[n+1].
    """
    if n_grid < 1 or step <= 0:
        raise ConfigError("grid must have step > 0 and at least one point")
    if backend_name() == "numba":
        return _get_numba_fns()["binned_loglik_uniform"](
            node_omega, node_coeff, bin_ptr, a_n, counts_b, counts_c,
            eta2, t0, step, n_grid, floor_p,
        )
    t_values = t0 + step * np.arange(n_grid)
    return _binned_loglik_numpy(
        node_omega, node_coeff, bin_ptr, a_n, counts_b, counts_c, eta2, t_values, floor_p
    )
