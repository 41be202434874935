"""Squeezing operations assembled from constant-force segments.

A quarter period of a constant oscillator with ``beta = kappa**2`` is the
squeezed Fourier matrix ``[[0, 1/kappa], [-kappa, 0]]``.  Two of them with
different kappa compose to a diagonal squeezer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidLambda, NotEquidiagonalCore, NotSymplectic
from .propagator import PiecewiseConstant, piecewise_product
from .sym2core import TOL_DET, Mat2, is_equidiagonal, is_symplectic, mul

EQUIDIAGONAL_TOL = 1e-12


def squeezed_fourier(kappa: float, sign: int = 1) -> Mat2:
    """``[[0, sign/kappa], [-sign*kappa, 0]]``; sign=+1 is the quarter period at beta = kappa**2."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return Mat2(0.0, sign / kappa, -sign * kappa, 0.0)


def quarter_period(kappa: float) -> tuple[float, float]:
    """Segment ``(duration, beta)`` realizing ``squeezed_fourier(kappa, +1)``."""
    return (math.pi / (2.0 * kappa), kappa * kappa)


@dataclass(frozen=True)
class PulsePlan:
    segments: tuple
    predicted: Mat2
    target_lambda: float | None = None
    requested_lambda: float | None = None

    def __post_init__(self):
        segs = tuple((float(d), float(b)) for d, b in self.segments)
        if any(not d > 0 for d, _ in segs):
            raise ValueError("segment durations must be positive")
        object.__setattr__(self, "segments", segs)

    @property
    def jumps(self) -> int:
        """Number of force discontinuities, counting the switch on and off."""
        levels = [0.0] + [b for _, b in self.segments] + [0.0]
        return sum(1 for a, b in zip(levels[:-1], levels[1:]) if a != b)

    @property
    def duration(self) -> float:
        return math.fsum(d for d, _ in self.segments)

    def profile(self) -> PiecewiseConstant:
        return PiecewiseConstant(self.segments)

    def to_json(self) -> dict:
        out = {
            "segments": [list(s) for s in self.segments],
            "predicted": self.predicted.to_rows(),
            "target_lambda": self.target_lambda,
        }
        if self.requested_lambda is not None:
            out["requested_lambda"] = self.requested_lambda
            out["sign_convention"] = "lambda = -kappa2/kappa1"
        out["jumps"] = self.jumps
        return out

    @classmethod
    def from_json(cls, obj) -> "PulsePlan":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple(tuple(s) for s in obj["segments"]), Mat2.from_rows(obj["predicted"]),
                   obj.get("target_lambda"), obj.get("requested_lambda"))


def two_step_squeeze(kappa1: float, kappa2: float) -> PulsePlan:
    """Two quarter periods giving ``diag(-kappa2/kappa1, -kappa1/kappa2)``.

    The kappa2 step acts first: F(kappa1) F(kappa2) is the stated diagonal.
    """
    if not (kappa1 > 0 and kappa2 > 0):
        raise ValueError("kappa1 and kappa2 must be positive")
    segs = (quarter_period(kappa2), quarter_period(kappa1))
    lam = -kappa2 / kappa1
    return PulsePlan(segs, Mat2(lam, 0.0, 0.0, -kappa1 / kappa2), target_lambda=lam)


def design_lambda(target_lambda: float) -> PulsePlan:
    """Plan squeezing q by |target_lambda| (kappa1 = 1, kappa2 = |lambda|).

    A two-step composition always carries the minus sign, so the realized
    diagonal is ``(-|lambda|, -1/|lambda|)``; ``target_lambda`` of the plan
    records that realized value.
    """
    if target_lambda == 0 or not math.isfinite(target_lambda):
        raise InvalidLambda("target lambda must be finite and nonzero")
    plan = two_step_squeeze(1.0, abs(target_lambda))
    return PulsePlan(plan.segments, plan.predicted, plan.target_lambda, float(target_lambda))


def plan_product(plan: PulsePlan) -> Mat2:
    """Closed-form product of the plan's segments, first segment acting first."""
    return piecewise_product(plan.segments)


def symmetric_product(core: Mat2, wings: Sequence[Mat2]) -> Mat2:
    """``v_n ... v_1 v_0 v_1 ... v_n`` with ``v_0 = core`` and ``wings = [v_1, ..., v_n]``.

    The wings must themselves be equidiagonal for the result to stay so
    (``v A v`` preserves u11 = u22 only when v does).
    """
    if not is_symplectic(core, TOL_DET):
        raise NotSymplectic("core must be symplectic")
    if not is_equidiagonal(core, EQUIDIAGONAL_TOL * max(1.0, core.max_abs())):
        raise NotEquidiagonalCore(f"core has u11 - u22 = {core.u11 - core.u22:.3e}")
    u = core
    for k, v in enumerate(wings, start=1):
        if not is_symplectic(v, TOL_DET):
            raise NotSymplectic(f"wing {k} must be symplectic")
        if not is_equidiagonal(v, EQUIDIAGONAL_TOL * max(1.0, v.max_abs())):
            raise NotEquidiagonalCore(f"wing {k} has u11 - u22 = {v.u11 - v.u22:.3e}")
        u = mul(v, mul(u, v))
    return u
