"""Elastic-force profiles beta(tau) and the evolution matrices they generate.

The evolution of ``(q, p)`` under ``H = p^2/2 + beta(tau) q^2/2`` is the 2x2
matrix ``u(tau1, tau0)`` solving ``du/dtau = L(tau) u`` with
``L = [[0, 1], [-beta, 0]]`` and ``u(tau0, tau0) = 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import _integrate
from .errors import NotSymmetricProfile, OutOfDomain
from .sym2core import Mat2, mul

TWO_PI = 2.0 * math.pi
SYMMETRY_PROBES = 64
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "adaptive"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    steps_per_period: int = 256
    renormalize_det: bool = False
    max_steps: int = 200_000

    def __post_init__(self):
        if self.method not in ("adaptive", "fixed_magnus2", "fixed_rk4"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.steps_per_period < 16:
            raise ValueError("steps_per_period must be >= 16")

    @property
    def tol(self) -> float:
        """Representative accuracy target of the configuration."""
        if self.method == "adaptive":
            return max(self.rel_tol, self.abs_tol)
        h = TWO_PI / self.steps_per_period
        return h ** (4 if self.method == "fixed_rk4" else 2)


DEFAULT_CONFIG = IntegratorConfig()


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True)
class Constant:
    beta: float

    period = None
    breakpoints = ()

    def __call__(self, tau):
        return self.beta + 0.0 * np.asarray(tau, dtype=float)


@dataclass(frozen=True)
class Paul:
    """``beta = beta0 + 2 beta1 cos(tau)``, period 2 pi."""

    beta0: float
    beta1: float

    period = TWO_PI
    breakpoints = ()

    def __call__(self, tau):
        return self.beta0 + 2.0 * self.beta1 * np.cos(tau)


@dataclass(frozen=True)
class PiecewiseConstant:
    """Consecutive constant segments ``(duration, beta)`` starting at tau = 0.

    The profile repeats with period ``sum(durations)``; at a segment boundary
    the value of the following segment is used.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple((float(d), float(b)) for d, b in self.segments)
        if not segs:
            raise ValueError("at least one segment required")
        if any(not (d > 0 and math.isfinite(d)) for d, _ in segs):
            raise ValueError("segment durations must be positive")
        if any(not math.isfinite(b) for _, b in segs):
            raise ValueError("segment values must be finite")
        object.__setattr__(self, "segments", segs)

    @property
    def period(self) -> float:
        return math.fsum(d for d, _ in self.segments)

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([d for d, _ in self.segments])])

    @property
    def breakpoints(self) -> tuple:
        # kinks within one period, replicated by the propagator
        return tuple(self.edges[:-1])

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        T = self.period
        phase = np.mod(tau, T)
        idx = np.searchsorted(self.edges, phase, side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        values = np.array([b for _, b in self.segments])
        out = values[idx]
        return float(out) if out.ndim == 0 else out

    def pieces(self, tau0: float, tau1: float):
        """Yield ``(duration, beta)`` for the part of the periodic profile in [tau0, tau1]."""
        T = self.period
        edges = self.edges
        k = math.floor(tau0 / T)
        t = tau0
        while t < tau1:
            base = k * T
            for j, (_, b) in enumerate(self.segments):
                hi = base + edges[j + 1]
                if hi <= t:
                    continue
                end = min(hi, tau1)
                if end > t:
                    yield end - t, b
                    t = end
                if t >= tau1:
                    return
            k += 1


@dataclass(frozen=True, eq=False)
class Sampled:
    """Linear interpolation of ``values`` on a strictly increasing ``tau`` grid.

    With ``period`` set, tau is wrapped into ``[tau[0], tau[0] + period)``
    before lookup; otherwise evaluating outside the grid raises OutOfDomain.
    """

    tau: np.ndarray
    values: np.ndarray
    period: float | None = None

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if tau.ndim != 1 or tau.size < 2 or tau.shape != values.shape:
            raise ValueError("need matching 1-D grids with at least 2 points")
        if np.any(np.diff(tau) <= 0):
            raise ValueError("tau grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        if self.period is not None and tau[-1] - tau[0] < self.period * (1 - 1e-12):
            raise ValueError("grid shorter than the declared period")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)

    @property
    def breakpoints(self) -> tuple:
        if self.period is not None:
            return tuple(self.tau[self.tau < self.tau[0] + self.period])
        return tuple(self.tau)

    def __call__(self, tau):
        t = np.asarray(tau, dtype=float)
        if self.period is not None:
            t = self.tau[0] + np.mod(t - self.tau[0], self.period)
        else:
            lo, hi = self.tau[0], self.tau[-1]
            slack = 1e-12 * max(1.0, abs(lo), abs(hi))
            if np.any(t < lo - slack) or np.any(t > hi + slack):
                raise OutOfDomain(f"tau={tau} outside sampled grid [{lo}, {hi}]")
        out = np.interp(t, self.tau, self.values)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Analytic:
    """Arbitrary callable ``func(tau)`` with optional period and kinks."""

    func: Callable
    period: float | None = None
    breakpoints: tuple = ()

    def __call__(self, tau):
        return self.func(tau)


@dataclass(frozen=True, eq=False)
class FromTheta:
    """The force emitted by the inverse design for a prescribed theta(tau).

    Mirrored to negative tau, so the profile is symmetric on [-T, T].
    """

    spec: object
    period = None
    breakpoints = ()

    def __call__(self, tau):
        from .thetainverse import beta_from_theta

        t = np.asarray(tau, dtype=float)
        if t.ndim == 0:
            return beta_from_theta(self.spec, abs(float(t)))
        return np.array([beta_from_theta(self.spec, abs(float(x))) for x in t])


BetaProfile = Union[Constant, Paul, PiecewiseConstant, Sampled, Analytic, FromTheta]


def beta_eval(profile: BetaProfile, tau: float) -> float:
    v = float(profile(tau))
    if not math.isfinite(v):
        raise OutOfDomain(f"profile not finite at tau={tau}")
    return v


def profile_period(profile: BetaProfile) -> float | None:
    return getattr(profile, "period", None)


# ---------------------------------------------------------------- closed forms


def closed_form_rotation(kappa: float, delta_tau: float) -> Mat2:
    """``exp(delta_tau L)`` for constant ``beta = kappa**2``; kappa = 0 gives free drift."""
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    if delta_tau < 0:
        raise ValueError("delta_tau must be non-negative")
    return segment_matrix(kappa * kappa, delta_tau)


def segment_matrix(beta: float, delta_tau: float) -> Mat2:
    """Exact evolution over ``delta_tau`` at constant beta of either sign."""
    c, s = _integrate.rotation_entries(beta, delta_tau)
    c, s = float(c), float(s)
    return Mat2(c, s, -beta * s, c)


def piecewise_product(pieces: Sequence) -> Mat2:
    """Time-ordered product of exact segment matrices; the first piece acts first."""
    u = Mat2.identity()
    for d, b in pieces:
        u = mul(segment_matrix(b, d), u)
    return u


# ---------------------------------------------------------------- propagation


def _finish(y, cfg) -> Mat2:
    u = Mat2.from_array(y)
    if cfg.renormalize_det:
        d = u.det
        if d > 0:
            u = u.scale(1.0 / math.sqrt(d))
    return u


def _kinked(profile) -> bool:
    return len(getattr(profile, "breakpoints", ())) > 0


def _integrate_profile(profile, tau0, tau1, cfg, form="left"):
    return _integrate.evolve(profile, tau0, tau1, np.eye(2).reshape(1, 4), cfg, form=form,
                             breakpoints=_breaks(profile, tau0, tau1), clamp=_kinked(profile))


def _breaks(profile, tau0, tau1):
    br = list(getattr(profile, "breakpoints", ()))
    T = profile_period(profile)
    if br and T:
        # periodic repetition of the kinks across [tau0, tau1]
        k0, k1 = math.floor(tau0 / T) - 1, math.ceil(tau1 / T) + 1
        br = [b + k * T for k in range(k0, k1 + 1) for b in br]
    return tuple(sorted(b for b in br if tau0 < b < tau1))


def propagate(profile: BetaProfile, tau0: float, tau1: float,
              cfg: IntegratorConfig = DEFAULT_CONFIG) -> Mat2:
    """Evolution matrix ``u(tau1, tau0)``.

    A backward interval (tau1 < tau0) returns the symplectic inverse of the
    forward propagator.  Piecewise-constant profiles are composed from exact
    segment exponentials unless ``cfg.method == "fixed_rk4"``.
    """
    if tau1 < tau0:
        return propagate(profile, tau1, tau0, cfg).inverse()
    if tau1 == tau0:
        return Mat2.identity()
    if isinstance(profile, PiecewiseConstant) and cfg.method != "fixed_rk4":
        return piecewise_product(list(profile.pieces(tau0, tau1)))
    if isinstance(profile, Sampled):
        beta_eval(profile, tau0)
        beta_eval(profile, tau1)
    return _finish(_integrate_profile(profile, tau0, tau1, cfg)[0], cfg)


def propagate_path(profile: BetaProfile, taus: Sequence[float],
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> list[Mat2]:
    """``u(taus[k], taus[0])`` for a non-decreasing sequence of times."""
    taus = [float(t) for t in taus]
    if isinstance(profile, PiecewiseConstant) and cfg.method != "fixed_rk4":
        out, u = [Mat2.identity()], Mat2.identity()
        for a, b in zip(taus[:-1], taus[1:]):
            u = mul(piecewise_product(list(profile.pieces(a, b))), u)
            out.append(u)
        return out
    ys = _integrate.evolve_path(profile, taus, np.eye(2).reshape(1, 4), cfg,
                                breakpoints=_breaks(profile, taus[0], taus[-1]),
                                clamp=_kinked(profile))
    return [_finish(y[0], cfg) for y in ys]


def check_symmetric(profile: BetaProfile, T: float, probes: int = SYMMETRY_PROBES,
                    tol: float = SYMMETRY_TOL) -> float:
    """Max mismatch ``|beta(tau) - beta(-tau)|`` over mirrored probes in (0, T].

    Raises NotSymmetricProfile above ``tol`` (relative to max(1, |beta|)).
    """
    # irrational offset keeps probes off segment boundaries
    frac = (np.arange(probes) + 0.5 * (math.sqrt(5.0) - 1.0)) / probes
    taus = T * frac
    worst = 0.0
    for t in taus:
        a, b = beta_eval(profile, t), beta_eval(profile, -t)
        mis = abs(a - b) / max(1.0, abs(a), abs(b))
        worst = max(worst, mis)
    if worst > tol:
        raise NotSymmetricProfile(f"beta(tau) != beta(-tau): mismatch {worst:.3e}")
    return worst


def _symmetric_breaks(profile, T):
    br = _breaks(profile, -T, T)
    return tuple(sorted({abs(b) for b in br if 0 < abs(b) < T}))


def propagate_symmetric(profile: BetaProfile, T: float,
                        cfg: IntegratorConfig = DEFAULT_CONFIG) -> Mat2:
    """``u(T, -T)`` from the expanding-interval equation du/dtau = L u + u L."""
    if not T > 0:
        raise ValueError("T must be positive")
    check_symmetric(profile, T)
    y = _integrate.evolve(profile, 0.0, T, np.eye(2).reshape(1, 4), cfg, form="anti",
                          breakpoints=_symmetric_breaks(profile, T), clamp=_kinked(profile))
    return _finish(y[0], cfg)


def symmetric_path(profile: BetaProfile, taus: Sequence[float],
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> list[Mat2]:
    """``u(tau, -tau)`` at each non-negative, non-decreasing tau (taus[0] may be 0)."""
    taus = [float(t) for t in taus]
    if taus[0] < 0:
        raise ValueError("symmetric path starts at tau >= 0")
    check_symmetric(profile, taus[-1])
    start = [0.0] if taus[0] > 0 else []
    ys = _integrate.evolve_path(profile, start + taus, np.eye(2).reshape(1, 4), cfg,
                                form="anti", breakpoints=_symmetric_breaks(profile, taus[-1]),
                                clamp=_kinked(profile))
    ys = ys[len(start):]
    return [_finish(y[0], cfg) for y in ys]


# ---------------------------------------------------------------- JSON


def profile_from_json(obj) -> BetaProfile:
    """Build a profile from the CLI's JSON schema (dict or JSON text).

    A pulse-plan document (``{"segments": ...}`` without ``type``) is read as
    a piecewise profile.
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    if kind is None and "segments" in obj:
        kind = "piecewise"
    if kind == "paul":
        return Paul(float(obj["beta0"]), float(obj["beta1"]))
    if kind == "constant":
        return Constant(float(obj["beta"]))
    if kind == "piecewise":
        return PiecewiseConstant(tuple(tuple(s) for s in obj["segments"]))
    if kind == "sampled":
        return Sampled(np.asarray(obj["tau"], float), np.asarray(obj["beta"], float),
                       obj.get("period"))
    raise ValueError(f"unknown profile type {kind!r}")


def profile_to_json(profile: BetaProfile) -> dict:
    if isinstance(profile, Paul):
        return {"type": "paul", "beta0": profile.beta0, "beta1": profile.beta1}
    if isinstance(profile, Constant):
        return {"type": "constant", "beta": profile.beta}
    if isinstance(profile, PiecewiseConstant):
        return {"type": "piecewise", "segments": [list(s) for s in profile.segments]}
    if isinstance(profile, Sampled):
        d = {"type": "sampled", "tau": profile.tau.tolist(), "beta": profile.values.tolist()}
        if profile.period is not None:
            d["period"] = profile.period
        return d
    raise TypeError(f"{type(profile).__name__} has no JSON form")
