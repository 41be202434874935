"""Batched integrators for the 2x2 evolution equations.

State arrays have shape ``(N, 4)`` holding ``(u11, u12, u21, u22)`` for N
independent problems that share the time axis.  ``beta(t)`` returns either a
scalar or an array of shape ``(N,)``.

Two right-hand sides are supported:

``"left"``  du/dt = L u            (ordinary propagation)
``"anti"``  du/dt = L u + u L      (expanding symmetric interval)

with ``L = [[0, 1], [-beta, 0]]``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from .errors import ToleranceNotMet

_A = _dop.A[:_dop.N_STAGES, :_dop.N_STAGES]
_B = _dop.B
_C = _dop.C[:_dop.N_STAGES]
_E3 = _dop.E3
_E5 = _dop.E5
_NS = _dop.N_STAGES
_ORDER = 8
_ERR_EXP = -1.0 / 8.0
_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0


def _rhs_left(beta, t, y):
    b = np.asarray(beta(t), dtype=float)
    out = np.empty_like(y)
    out[:, 0] = y[:, 2]
    out[:, 1] = y[:, 3]
    out[:, 2] = -b * y[:, 0]
    out[:, 3] = -b * y[:, 1]
    return out


def _rhs_anti(beta, t, y):
    b = np.asarray(beta(t), dtype=float)
    out = np.empty_like(y)
    diag = y[:, 2] - b * y[:, 1]
    tr = y[:, 0] + y[:, 3]
    out[:, 0] = diag
    out[:, 1] = tr
    out[:, 2] = -b * tr
    out[:, 3] = diag
    return out


_RHS = {"left": _rhs_left, "anti": _rhs_anti}


def rotation_entries(beta, h):
    """Diagonal and (1,2) entries of exp(h L) for constant beta.

    Returns ``(c, s)`` with ``exp(h L) = [[c, s], [-beta s, c]]``; handles
    beta > 0 (rotation), beta < 0 (hyperbolic) and beta == 0 (free drift).
    """
    beta = np.asarray(beta, dtype=float)
    h = np.asarray(h, dtype=float)
    k = np.sqrt(np.abs(beta))
    kh = k * h
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = np.where(beta > 0, np.cos(kh), np.cosh(kh))
        s = np.where(beta > 0, np.sin(kh) / k, np.sinh(kh) / k)
    small = kh < 1e-8
    if np.any(small):
        # series: sin(x)/k ~ h (1 -+ x^2/6)
        sgn = np.where(beta > 0, -1.0, 1.0)
        s = np.where(small, h * (1.0 + sgn * kh * kh / 6.0), s)
        c = np.where(small, 1.0 + sgn * kh * kh / 2.0, c)
    return c, s


def _apply_left(c, s, b, y):
    # [[c, s], [-b s, c]] @ u
    u11, u12, u21, u22 = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
    out = np.empty_like(y)
    out[:, 0] = c * u11 + s * u21
    out[:, 1] = c * u12 + s * u22
    out[:, 2] = -b * s * u11 + c * u21
    out[:, 3] = -b * s * u12 + c * u22
    return out


def _apply_right(c, s, b, y):
    # u @ [[c, s], [-b s, c]]
    u11, u12, u21, u22 = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
    out = np.empty_like(y)
    out[:, 0] = c * u11 - b * s * u12
    out[:, 1] = s * u11 + c * u12
    out[:, 2] = c * u21 - b * s * u22
    out[:, 3] = s * u21 + c * u22
    return out


def _max_norm(x):
    return float(np.max(np.abs(x))) if x.size else 0.0


def _initial_step(rhs, t0, y0, f0, t1, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = _max_norm(y0 / scale)
    d1 = _max_norm(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = _max_norm((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (_ORDER))
    return min(100 * h0, h1, t1 - t0)


def _dop853(rhs, t0, t1, y, rtol, atol, h_abs=None, max_steps=100_000):
    """Embedded 8(5,3) Runge-Kutta from t0 to t1 with per-component max-norm control."""
    t = t0
    f = rhs(t, y)
    if h_abs is None:
        h_abs = _initial_step(rhs, t0, y, f, t1, rtol, atol)
    K = np.empty((_NS + 1,) + y.shape)
    steps = 0
    while t < t1:
        steps += 1
        if steps > max_steps:
            raise ToleranceNotMet(f"exceeded {max_steps} steps between {t0} and {t1}")
        min_step = 10.0 * abs(np.nextafter(t, math.inf) - t)
        rejected = False
        while True:
            if h_abs < min_step:
                raise ToleranceNotMet(f"step size underflow at t={t:.6g}")
            h = h_abs
            t_new = t + h
            if t_new >= t1:
                t_new = t1
                h = t_new - t
            K[0] = f
            for s in range(1, _NS):
                dy = np.tensordot(_A[s, :s], K[:s], axes=(0, 0)) * h
                K[s] = rhs(t + _C[s] * h, y + dy)
            y_new = y + h * np.tensordot(_B, K[:_NS], axes=(0, 0))
            f_new = rhs(t + h, y_new)
            K[_NS] = f_new
            scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
            e5 = np.tensordot(_E5, K, axes=(0, 0)) / scale
            e3 = np.tensordot(_E3, K, axes=(0, 0)) / scale
            e5sq = e5 * e5
            den = np.sqrt(e5sq + 0.01 * e3 * e3)
            with np.errstate(invalid="ignore", divide="ignore"):
                en = np.where(den > 0, e5sq / den, 0.0)
            err = abs(h) * _max_norm(en)
            if not math.isfinite(err):
                h_abs *= _MIN_FACTOR
                rejected = True
                continue
            if err < 1.0:
                factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * err ** _ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                if h >= h_abs:
                    h_abs = h * factor
                break
            h_abs *= max(_MIN_FACTOR, _SAFETY * err ** _ERR_EXP)
            rejected = True
        t, y, f = t_new, y_new, f_new
    return y, h_abs


def _rk4(rhs, t0, t1, y, n):
    h = (t1 - t0) / n
    for i in range(n):
        t = t0 + i * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _magnus2(beta, form, t0, t1, y, n):
    h = (t1 - t0) / n
    for i in range(n):
        b = np.asarray(beta(t0 + (i + 0.5) * h), dtype=float)
        c, s = rotation_entries(b, h)
        y = _apply_left(c, s, b, y)
        if form == "anti":
            y = _apply_right(c, s, b, y)
    return y


def _n_fixed(t0, t1, steps_per_period):
    return max(1, math.ceil(steps_per_period * (t1 - t0) / (2.0 * math.pi) - 1e-9))


def _pieces(t0, t1, breakpoints):
    cuts = sorted(b for b in breakpoints if t0 < b < t1)
    edges = [t0, *cuts, t1]
    return list(zip(edges[:-1], edges[1:]))


def evolve(beta, t0, t1, y0, cfg, form="left", breakpoints=(), clamp=False):
    """Integrate from ``t0`` to ``t1 >= t0`` starting at ``y0`` (shape (N, 4))."""
    return evolve_path(beta, [t0, t1], y0, cfg, form, breakpoints, clamp)[-1]


def evolve_path(beta, times, y0, cfg, form="left", breakpoints=(), clamp=False):
    """States at every entry of the non-decreasing ``times`` (first entry = start)."""
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim == 1:
        y = y.reshape(1, 4)
    rhs_fn = _RHS[form]
    kinked = len(breakpoints) > 0 or clamp
    window = [0.0, 0.0]

    def beta_in(t):
        # at a kink, evaluate on the side of the current piece
        return beta(min(max(t, window[0]), window[1]))

    f_beta = beta_in if kinked else beta

    def rhs(t, yy):
        return rhs_fn(f_beta, t, yy)

    out = [y.copy()]
    h_abs = None
    for a, b in zip(times[:-1], times[1:]):
        if b < a:
            raise ValueError("times must be non-decreasing")
        for p, q in _pieces(a, b, breakpoints):
            if q <= p:
                continue
            pad = 1e-12 * (q - p)
            window[0], window[1] = p + pad, q - pad
            if cfg.method == "adaptive":
                y, h_abs = _dop853(rhs, p, q, y, cfg.rel_tol, cfg.abs_tol, h_abs, cfg.max_steps)
            elif cfg.method == "fixed_rk4":
                y = _rk4(rhs, p, q, y, _n_fixed(p, q, cfg.steps_per_period))
            elif cfg.method == "fixed_magnus2":
                y = _magnus2(f_beta, form, p, q, y, _n_fixed(p, q, cfg.steps_per_period))
            else:
                raise ValueError(f"unknown method {cfg.method!r}")
        out.append(y.copy())
    return np.stack(out)
