"""Thin ODE driver shared by the moment solver and the Fock-space oracle.

Adaptive runs use scipy's Dormand-Prince 5(4) pair with its continuous
extension for the requested sample times. Fixed-step runs use classical RK4
with an integer number of equal substeps between consecutive samples, which
makes them bit-reproducible for a given step size.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.integrate import RK45


class StiffnessError(RuntimeError):
    """The adaptive step size collapsed before reaching the end of the run."""

    def __init__(self, time: float, message: str = ""):
        self.time = time
        super().__init__(f"step-size underflow at t={time:.12g}" + (f": {message}" if message else ""))


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def solve(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t0: float,
    t_eval: np.ndarray,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    method: str = "adaptive",
    step: float | None = None,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    on_sample: Callable[[int, float, np.ndarray], None] | None = None,
) -> np.ndarray | None:
    """Integrate ``dy/dt = rhs(t, y)`` from ``t0`` and return ``y`` at each of ``t_eval``.

    ``t_eval`` must be non-decreasing and start at or after ``t0``. ``project``
    is applied to every returned sample (and after every fixed step). When
    ``on_sample(i, t, y)`` is given, samples are streamed to it instead of
    being collected and ``None`` is returned.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    y0 = np.asarray(y0)
    if t_eval.ndim != 1 or t_eval.size == 0:
        raise ValueError("t_eval must be a non-empty 1-d array")
    if np.any(np.diff(t_eval) < 0) or t_eval[0] < t0:
        raise ValueError("sample times must be non-decreasing and not precede t0")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")

    store = on_sample is None
    out = np.empty((t_eval.size,) + y0.shape, dtype=np.result_type(y0.dtype, float)) if store else None

    def emit(i, y):
        if project is not None:
            y = project(y)
        if store:
            out[i] = y
        else:
            on_sample(i, float(t_eval[i]), y)

    if method == "fixed":
        if step is None or step <= 0:
            raise ValueError("fixed-step integration needs a positive step")
        t, y = t0, y0.copy()
        for i, target in enumerate(t_eval):
            span = target - t
            if span > 0:
                n = max(1, math.ceil(span / step - 1e-9))
                h = span / n
                for j in range(n):
                    y = _rk4_step(rhs, t + j * h, y, h)
                    if project is not None:
                        y = project(y)
                t = target
            emit(i, y)
        return out

    if method != "adaptive":
        raise ValueError(f"unknown integration method {method!r}")

    t_end = float(t_eval[-1])
    i = 0
    while i < t_eval.size and t_eval[i] == t0:
        emit(i, y0)
        i += 1
    if i < t_eval.size:
        solver = RK45(rhs, t0, y0, t_end, rtol=rtol, atol=atol)
        while i < t_eval.size:
            message = solver.step()
            if solver.status == "failed":
                raise StiffnessError(solver.t, message or "")
            j = i
            while j < t_eval.size and t_eval[j] <= solver.t:
                j += 1
            if j > i:
                dense = solver.dense_output()
                for k in range(i, j):
                    emit(k, solver.y if t_eval[k] == solver.t else dense(t_eval[k]))
                i = j
            if solver.status == "finished":
                for k in range(i, t_eval.size):
                    emit(k, solver.y)
                i = t_eval.size
    return out
