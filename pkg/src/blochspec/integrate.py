"""Batched adaptive Dormand-Prince 8(5,3) integration of linear complex systems.

All trajectories in a batch share one step sequence. That keeps the
discrete propagator a smooth function of the spectral parameter inside a
batch, which the finite-difference Newton derivative relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from .errors import NonFiniteSolution, StepSizeUnderflow

_N = _dop.N_STAGES
_A = _dop.A[:_N, :_N]
_B = _dop.B
_C = _dop.C[:_N]
_E3 = _dop.E3
_E5 = _dop.E5

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0


@dataclass
class IntegrationStats:
    steps: int = 0
    rejected: int = 0
    max_error: float = 0.0  # largest accepted local error, in units of rtol-scaled norm
    rtol: float = 0.0

    @property
    def achieved_tolerance(self) -> float:
        return self.max_error * self.rtol


def _column_norm(err, scale):
    # err, scale: (..., rows, cols); RMS over rows
    return np.sqrt(np.mean(np.abs(err / scale) ** 2, axis=-2))


def _error_norm(K, h, scale):
    err5 = np.tensordot(_E5, K, axes=(0, 0))
    err3 = np.tensordot(_E3, K, axes=(0, 0))
    e5 = np.sum(np.abs(err5 / scale) ** 2, axis=-2)
    e3 = np.sum(np.abs(err3 / scale) ** 2, axis=-2)
    denom = e5 + 0.01 * e3
    rows = K.shape[-2]
    with np.errstate(invalid="ignore", divide="ignore"):
        norm = np.where(denom > 0, abs(h) * e5 / np.sqrt(denom * rows), 0.0)
    return float(np.max(norm))


def _scale(y, y_new, rtol, atol):
    mag = np.max(np.abs(y), axis=-2, keepdims=True)
    if y_new is not None:
        mag = np.maximum(mag, np.max(np.abs(y_new), axis=-2, keepdims=True))
    return atol + rtol * mag


def integrate(fun, y0, length, rtol=1e-10, atol=None, first_step=None,
              max_steps=200_000):
    """Integrate ``y' = fun(tau, y)`` for ``tau`` in ``[0, length]``.

    ``y0`` has shape ``(..., rows, cols)``; each column is a trajectory whose
    error is measured relative to its own max-norm. Returns ``(y, stats)``.
    """
    y = np.array(y0, dtype=complex)
    if atol is None:
        atol = rtol * 1e-3
    stats = IntegrationStats(rtol=rtol)
    tau = 0.0
    f = fun(tau, y)
    K = np.empty((_N + 1,) + y.shape, dtype=complex)

    if first_step is None:
        scale = _scale(y, None, rtol, atol)
        d0 = float(np.max(_column_norm(y, scale)))
        d1 = float(np.max(_column_norm(f, scale)))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * length
        h = min(h, length)
    else:
        h = min(first_step, length)
    h_floor = 1e-14 * max(length, 1e-300)

    while tau < length:
        if stats.steps + stats.rejected > max_steps:
            raise StepSizeUnderflow("maximum number of steps exceeded")
        if h < h_floor:
            raise StepSizeUnderflow(f"step size {h:.3e} below floor at tau={tau:.6g}")
        last = tau + h >= length
        if last:
            h = length - tau
        K[0] = f
        for s in range(1, _N):
            dy = np.tensordot(_A[s, :s], K[:s], axes=(0, 0)) * h
            K[s] = fun(tau + _C[s] * h, y + dy)
        y_new = y + h * np.tensordot(_B, K[:_N], axes=(0, 0))
        f_new = fun(tau + h, y_new)
        K[_N] = f_new
        if not np.all(np.isfinite(y_new)):
            if h > h_floor * 1e3:
                stats.rejected += 1
                h *= MIN_FACTOR
                continue
            raise NonFiniteSolution("non-finite values in fundamental system")
        scale = _scale(y, y_new, rtol, atol)
        err = _error_norm(K, h, scale)
        if err <= 1.0:
            tau = length if last else tau + h
            y, f = y_new, f_new
            stats.steps += 1
            stats.max_error = max(stats.max_error, err)
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            h *= factor
        else:
            stats.rejected += 1
            h *= max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
    return y, stats

