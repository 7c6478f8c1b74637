"""Adaptive embedded Runge-Kutta 4(5) (Dormand-Prince) for complex systems.

Pinned here rather than delegated to a black-box solver so the integration is
bit-reproducible across environments and a per-step hook (used for density-
matrix re-symmetrization) is available. The controller is the standard
error-per-step scheme with a fifth-order propagated solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Dormand-Prince coefficients (FSAL pair of orders 5 and 4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])


class StepSizeCollapse(RuntimeError):
    """Adaptive controller fell below the minimum step size."""

    def __init__(self, t: float, h: float, err: float):
        super().__init__(
            f"step size collapsed at t={t:.6g} (h={h:.3e}, error ratio {err:.3e}); "
            "the problem is likely outside the integrator's validity regime")
        self.t = t
        self.h = h
        self.err = err


@dataclass
class OdeResult:
    times: np.ndarray
    states: np.ndarray          # shape (len(times), n)
    n_steps: int
    n_rejected: int


def integrate_adaptive(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    sample_times: np.ndarray,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    h_min: float = 1e-12,
    h_max: float | None = None,
    post_step: Callable[[np.ndarray], np.ndarray] | None = None,
) -> OdeResult:
    """Integrate y' = f(t, y) and sample the solution on ``sample_times``.

    Steps are clipped to land exactly on every sample time (no interpolation),
    and ``post_step`` is applied to each accepted state. Raises
    ``StepSizeCollapse`` if the controller drops below ``h_min``.
    """
    ts = np.asarray(sample_times, dtype=float)
    if ts.ndim != 1 or ts.size < 1 or np.any(np.diff(ts) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    y = np.asarray(y0, dtype=complex).copy()
    n = y.size
    t = float(ts[0])
    t_end = float(ts[-1])
    if h_max is None:
        h_max = max((t_end - t) / 10.0, 1e-8)

    out = np.empty((ts.size, n), dtype=complex)
    out[0] = y
    next_sample = 1

    # initial step guess from the first derivative scale
    k = f(t, y)
    scale = abs_tol + rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((np.abs(y) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(k) / scale) ** 2))
    h = min(h_max, 0.01 * d0 / d1 if d1 > 0 else 1e-4)
    h = max(h, h_min)

    ks = np.empty((7, n), dtype=complex)
    ks[0] = k
    n_steps = 0
    n_rejected = 0

    while t < t_end:
        hit_sample = False
        if t + h >= ts[next_sample] - 1e-14 * max(1.0, abs(t)):
            h_try = ts[next_sample] - t
            hit_sample = True
        else:
            h_try = h
        with np.errstate(invalid="ignore", over="ignore"):
            for i in range(1, 7):
                yi = y + h_try * (ks[:i].T @ _A[i])
                ks[i] = f(t + _C[i] * h_try, yi)
            y5 = y + h_try * (ks.T @ _B5)
            y4 = y + h_try * (ks.T @ _B4)
            diff = y5 - y4
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y5))
            err = np.sqrt(np.mean((np.abs(diff) / scale) ** 2))
        if not np.isfinite(err):
            err = np.inf

        if err <= 1.0:
            t = t + h_try
            y = y5
            if post_step is not None:
                y = post_step(y)
            ks[0] = f(t, y)  # FSAL invalidated by post_step; recompute
            n_steps += 1
            if hit_sample and abs(t - ts[next_sample]) <= 1e-12 * max(1.0, abs(t)):
                out[next_sample] = y
                next_sample += 1
                if next_sample >= ts.size:
                    break
            factor = 0.9 * err ** (-0.2) if err > 0 else 5.0
            h = min(h_max, h_try * min(5.0, max(0.2, factor)))
        else:
            n_rejected += 1
            factor = 0.1 if not np.isfinite(err) else 0.9 * err ** (-0.2)
            h = h_try * min(1.0, max(0.1, factor))
            if h < h_min:
                raise StepSizeCollapse(t, h, err)

    return OdeResult(times=ts, states=out, n_steps=n_steps, n_rejected=n_rejected)
