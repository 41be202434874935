"""Exact inverse design on symmetric intervals.

A designer picks ``theta(tau) = u12(tau, -tau)``; the symmetric-interval
matrices are then fixed algebraically,

    u11 = u22 = theta'/2,     u21 = ((theta'/2)**2 - 1) / theta,

and the force that realizes them is

    beta = -theta''/(2 theta) + ((theta'/2)**2 - 1) / theta**2.

Where theta vanishes both quotients have removable singularities provided
theta' = +-2 there; a short Taylor expansion replaces the raw quotient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import OutOfDomain, SingularTheta
from .propagator import (DEFAULT_CONFIG, BetaProfile, FromTheta, IntegratorConfig,
                         propagate_path, symmetric_path)
from .sym2core import Mat2, mul

THETA_SINGULAR_TOL = 1e-4  # below this the raw quotient loses ~eps/theta**2 to cancellation
ZERO_TOL = 1e-6
CHECK_TOL = 1e-8


# ---------------------------------------------------------------- theta families


@dataclass(frozen=True)
class PolyTheta:
    """``theta = 2 tau + sum_k coeffs[k] tau**(2k + 3)`` on [0, T]."""

    coeffs: tuple
    T: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        c = np.zeros(2 * len(self.coeffs) + 2)
        c[1] = 2.0
        for k, a in enumerate(self.coeffs):
            c[2 * k + 3] = a
        p = Polynomial(c)
        object.__setattr__(self, "_polys", (p, p.deriv(1), p.deriv(2), p.deriv(3)))

    def derivs(self, tau: float):
        return tuple(float(p(tau)) for p in self._polys)

    def to_json(self) -> dict:
        return {"type": "analytic", "family": "poly", "coeffs": list(self.coeffs), "T": self.T}


@dataclass(frozen=True)
class SineTheta:
    """``theta = amplitude * sin(omega tau)``; valid when amplitude * omega = 2."""

    amplitude: float
    omega: float
    T: float

    def derivs(self, tau: float):
        a, w = self.amplitude, self.omega
        s, c = math.sin(w * tau), math.cos(w * tau)
        return (a * s, a * w * c, -a * w * w * s, -a * w ** 3 * c)

    def to_json(self) -> dict:
        return {"type": "analytic", "family": "sine", "amplitude": self.amplitude,
                "omega": self.omega, "T": self.T}


@dataclass(frozen=True, eq=False)
class AnalyticTheta:
    """User callable returning ``(theta, theta', theta'', theta''')`` at tau."""

    func: Callable
    T: float

    def derivs(self, tau: float):
        return tuple(float(v) for v in self.func(tau))


def _fd_weights(offsets, order: int) -> np.ndarray:
    # solve sum_j w_j o_j^k / k! = delta_{k, order}
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    V = np.array([offsets ** k / math.factorial(k) for k in range(n)])
    rhs = np.zeros(n)
    rhs[order] = 1.0
    return np.linalg.solve(V, rhs)


def _fd_derivative(values: np.ndarray, h: float, order: int) -> np.ndarray:
    """Fourth-order accurate finite differences on a uniform grid."""
    n = values.size
    half = (order + 3) // 2 if order % 2 else (order + 2) // 2
    central = np.arange(-half, half + 1)
    w_c = _fd_weights(central, order)
    m = order + 4
    out = np.empty(n)
    for i in range(n):
        if i - half >= 0 and i + half < n:
            out[i] = w_c @ values[i - half:i + half + 1]
        else:
            start = 0 if i - half < 0 else n - m
            offs = np.arange(start, start + m) - i
            out[i] = _fd_weights(offs, order) @ values[start:start + m]
    return out / h ** order


@dataclass(frozen=True, eq=False)
class SampledTheta:
    """theta sampled on a uniform grid over [0, T].

    Derivatives come from fourth-order finite differences on the odd
    extension theta(-tau) = -theta(tau) (one-sided only at tau = T), then
    cubic splines interpolate between nodes.  Accuracy is capped near h**4.
    """

    tau: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        if tau.ndim != 1 or tau.size < 8 or th.shape != tau.shape:
            raise ValueError("need matching 1-D grids with at least 8 points")
        h = np.diff(tau)
        if abs(tau[0]) > 1e-12 * max(1.0, tau[-1]) or np.any(h <= 0) or np.ptp(h) > 1e-9 * h.mean():
            raise ValueError("theta grid must be uniform and start at tau = 0")
        step = (tau[-1] - tau[0]) / (tau.size - 1)
        ext_tau = np.concatenate([-tau[:0:-1], tau])
        ext_th = np.concatenate([-th[:0:-1], th])
        tables = [ext_th] + [_fd_derivative(ext_th, step, d) for d in (1, 2, 3)]
        splines = tuple(CubicSpline(ext_tau, v) for v in tables)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "_splines", splines)

    @property
    def T(self) -> float:
        return float(self.tau[-1])

    def derivs(self, tau: float):
        return tuple(float(s(tau)) for s in self._splines)

    def to_json(self) -> dict:
        return {"type": "sampled", "T": self.T, "tau": self.tau.tolist(),
                "theta": self.theta.tolist()}


ThetaSpec = PolyTheta | SineTheta | AnalyticTheta | SampledTheta


def theta_from_json(obj: dict) -> ThetaSpec:
    kind = obj.get("type")
    if kind == "sampled":
        return SampledTheta(np.asarray(obj["tau"], float), np.asarray(obj["theta"], float))
    if kind == "analytic":
        family = obj.get("family")
        T = float(obj["T"]) if "T" in obj else 2.0
        if family == "poly":
            return PolyTheta(tuple(obj.get("coeffs", ())), T)
        if family == "sine":
            return SineTheta(float(obj["amplitude"]), float(obj["omega"]), T)
        raise ValueError(f"unknown analytic theta family {family!r}")
    raise ValueError(f"unknown theta type {kind!r}")


# ---------------------------------------------------------------- design formulas


def _check_domain(spec, tau):
    T = spec.T
    if tau < -1e-12 * max(1.0, T) or tau > T * (1 + 1e-12):
        raise OutOfDomain(f"tau={tau} outside [0, {T}]")


def _near_zero(t0, t1, zero_tol):
    if abs(abs(t1) - 2.0) > zero_tol:
        raise SingularTheta(
            f"theta = {t0:.3e} vanishes with theta' = {t1:.6g} (must be +-2): beta is singular")
    # distance from the zero of theta, one Newton step
    return math.copysign(2.0, t1), t0 / t1


def _beta_raw(spec, tau, singular_tol=THETA_SINGULAR_TOL, zero_tol=ZERO_TOL):
    t0, t1, t2, t3 = spec.derivs(tau)
    if abs(t0) >= singular_tol:
        return -t2 / (2.0 * t0) + (0.25 * t1 * t1 - 1.0) / (t0 * t0)
    a1, eps = _near_zero(t0, t1, zero_tol)
    a2 = 0.5 * (t2 - t3 * eps)
    a3 = t3 / 6.0
    return -a1 * t3 / 16.0 + eps * a2 * a3 / 2.0


def beta_from_theta(spec: ThetaSpec, tau: float, singular_tol: float = THETA_SINGULAR_TOL,
                    zero_tol: float = ZERO_TOL) -> float:
    """Force beta(tau) that makes theta the (1,2) entry of u(tau, -tau)."""
    _check_domain(spec, tau)
    return _beta_raw(spec, tau, singular_tol, zero_tol)


def u_from_theta(spec: ThetaSpec, tau: float, singular_tol: float = THETA_SINGULAR_TOL,
                 zero_tol: float = ZERO_TOL) -> Mat2:
    _check_domain(spec, tau)
    t0, t1, t2, t3 = spec.derivs(tau)
    d = 0.5 * t1
    if abs(t0) >= singular_tol:
        u21 = (d * d - 1.0) / t0
    else:
        _, eps = _near_zero(t0, t1, zero_tol)
        u21 = 0.5 * t2 - 0.25 * t3 * eps
    return Mat2(d, t0, u21, d)


# ---------------------------------------------------------------- validity report


@dataclass(frozen=True)
class ZeroCrossing:
    tau: float
    dtheta: float
    passed: bool


@dataclass(frozen=True)
class FourierPoint:
    tau: float
    theta: float
    beta: float
    residual: float
    beta_vanishes: bool
    passed: bool


@dataclass(frozen=True)
class StationaryBetaPoint:
    tau: float
    dbeta: float
    passed: bool


@dataclass
class ThetaValidityReport:
    T: float
    probe_count: int
    zero_crossings: list = field(default_factory=list)
    fourier_points: list = field(default_factory=list)
    stationary_beta_points: list = field(default_factory=list)
    max_abs_beta: float = 0.0
    errors: list = field(default_factory=list)

    @property
    def failed_clauses(self) -> list[str]:
        failed = []
        if any(not z.passed for z in self.zero_crossings) or self.errors:
            failed.append("i")
        if any(not s.passed for s in self.stationary_beta_points):
            failed.append("ii")
        if any(not f.passed for f in self.fourier_points):
            failed.append("iii")
        return failed

    @property
    def valid(self) -> bool:
        return not self.failed_clauses

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "probe_count": self.probe_count,
            "valid": self.valid,
            "failed_clauses": self.failed_clauses,
            "zero_crossings": [vars(z) for z in self.zero_crossings],
            "fourier_points": [vars(f) for f in self.fourier_points],
            "stationary_beta_points": [vars(s) for s in self.stationary_beta_points],
            "max_abs_beta": self.max_abs_beta,
            "errors": list(self.errors),
        }


def _roots(fn, grid, values):
    """Sign changes and exact zeros of sampled ``values``, refined with brentq."""
    roots = []
    for k in range(len(grid) - 1):
        a, b = grid[k], grid[k + 1]
        fa, fb = values[k], values[k + 1]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(fn, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    if values[-1] == 0.0:
        roots.append(grid[-1])
    return roots


def beta_slope(spec: ThetaSpec, tau: float, h: float = 1e-3) -> float:
    """Five-point central difference of beta (even extension below tau = 0)."""
    f = lambda t: _beta_raw(spec, abs(t))
    return (f(tau - 2 * h) - 8 * f(tau - h) + 8 * f(tau + h) - f(tau + 2 * h)) / (12 * h)


def validate_theta(spec: ThetaSpec, probe_count: int = 64, zero_tol: float = ZERO_TOL,
                   check_tol: float = CHECK_TOL) -> ThetaValidityReport:
    """Check the point conditions that keep beta finite and consistent.

    Clause i: wherever theta = 0, theta' = +-2 (and theta'(0) = 2).
    Clause ii: wherever theta''' = 0, beta' = 0.
    Clause iii: wherever theta' = 0 != theta, beta theta**2 = -theta'' theta/2 - 1.
    """
    if probe_count < 16:
        raise ValueError("probe_count must be >= 16")
    T = spec.T
    grid = np.linspace(0.0, T, probe_count + 1)
    table = np.array([spec.derivs(t) for t in grid])
    rep = ThetaValidityReport(T=T, probe_count=probe_count)

    th0, dth0 = table[0, 0], table[0, 1]
    rep.zero_crossings.append(
        ZeroCrossing(0.0, float(dth0), bool(abs(th0) <= zero_tol and abs(dth0 - 2.0) <= zero_tol)))

    comp = lambda i: (lambda t: spec.derivs(t)[i])
    for r in _roots(comp(0), grid[1:], table[1:, 0]):
        d1 = spec.derivs(r)[1]
        rep.zero_crossings.append(ZeroCrossing(float(r), float(d1), bool(abs(abs(d1) - 2.0) <= zero_tol)))

    if not rep.zero_crossings[0].passed:
        # beta itself is singular; the remaining clauses are meaningless
        return rep

    for r in _roots(comp(1), grid, table[:, 1]):
        t0, _, t2, _ = spec.derivs(r)
        if abs(t0) < THETA_SINGULAR_TOL:
            continue
        try:
            b = _beta_raw(spec, r)
        except SingularTheta as exc:
            rep.errors.append(str(exc))
            continue
        res = abs(b * t0 * t0 + 0.5 * t2 * t0 + 1.0)
        rep.fourier_points.append(FourierPoint(
            float(r), float(t0), float(b), float(res),
            bool(abs(t2 * t0 + 2.0) <= check_tol * max(1.0, abs(t2 * t0))), bool(res <= check_tol)))

    for r in _roots(comp(3), grid, table[:, 3]):
        try:
            s = beta_slope(spec, r, h=min(1e-3, T / (8 * probe_count)))
        except SingularTheta as exc:
            rep.errors.append(str(exc))
            continue
        rep.stationary_beta_points.append(StationaryBetaPoint(float(r), float(s), bool(abs(s) <= check_tol)))

    betas = []
    for t in grid:
        try:
            betas.append(abs(_beta_raw(spec, t)))
        except SingularTheta as exc:
            rep.errors.append(f"tau={t:.6g}: {exc}")
    rep.max_abs_beta = float(max(betas)) if betas else math.inf
    return rep


# ---------------------------------------------------------------- round trips


@dataclass(frozen=True)
class RoundTripReport:
    residual: float
    worst_tau: float
    taus: tuple
    residuals: tuple


def verify_roundtrip(spec: ThetaSpec, cfg: IntegratorConfig = DEFAULT_CONFIG,
                     probe_count: int = 32) -> RoundTripReport:
    """Forward-integrate the designed force and compare with the designed matrices.

    One pass of du/dtau = L u from -T to T gives u(t, -T); the symmetric
    matrices follow as u(tau, -tau) = u(tau, -T) u(-tau, -T)^-1.
    """
    T = spec.T
    taus = np.linspace(0.0, T, probe_count + 1)[1:]
    times = np.concatenate([-taus[::-1], [0.0], taus])
    path = propagate_path(FromTheta(spec), times, cfg)
    n = len(taus)
    res = []
    for k, tau in enumerate(taus):
        fwd = path[n + 1 + k]
        back = path[n - 1 - k]
        u = mul(fwd, back.inverse())
        res.append(u.distance(u_from_theta(spec, float(tau))))
    j = int(np.argmax(res))
    return RoundTripReport(float(res[j]), float(taus[j]), tuple(map(float, taus)), tuple(res))


def extract_theta(profile: BetaProfile, T: float, n: int,
                  cfg: IntegratorConfig = DEFAULT_CONFIG) -> SampledTheta:
    """theta(tau) = u12(tau, -tau) of a symmetric profile on a uniform grid."""
    taus = np.linspace(0.0, T, n + 1)
    mats = symmetric_path(profile, taus, cfg)
    return SampledTheta(taus, np.array([m.u12 for m in mats]))


def beta_samples(spec: ThetaSpec, taus: Sequence[float]) -> np.ndarray:
    return np.array([beta_from_theta(spec, float(t)) for t in taus])
