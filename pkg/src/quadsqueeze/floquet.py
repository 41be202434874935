"""Monodromy matrices of periodic profiles and the three motion classes."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NotPeriodic
from .propagator import (DEFAULT_CONFIG, FromTheta, IntegratorConfig, Sampled, Analytic,
                         Constant, BetaProfile, profile_period, propagate)
from .sym2core import TOL_GAMMA, EigenStructure, Mat2, det_drift, eigen

# integrated monodromy matrices carry integrator drift; eigen() must accept it
MONODROMY_TOL_DET = 1e-6


class MotionClass(enum.Enum):
    I_STABLE = "I"
    II_THRESHOLD = "II"
    III_SQUEEZING = "III"

    @property
    def label(self) -> str:
        return self.value


def classify(gamma: float, tol_gamma: float = TOL_GAMMA) -> MotionClass:
    excess = abs(gamma) - 2.0
    if abs(excess) <= tol_gamma:
        return MotionClass.II_THRESHOLD
    return MotionClass.I_STABLE if excess < 0 else MotionClass.III_SQUEEZING


@dataclass(frozen=True)
class MonodromyReport:
    gamma: float
    motion_class: MotionClass
    eigen: EigenStructure
    tau0: float
    matrix: Mat2
    period: float

    @property
    def det_drift(self) -> float:
        return det_drift(self.matrix)

    def to_dict(self) -> dict:
        e = self.eigen

        def _num(z):
            return [z.real, z.imag] if isinstance(z, complex) else z

        return {
            "gamma": self.gamma,
            "class": self.motion_class.label,
            "tau0": self.tau0,
            "period": self.period,
            "matrix": self.matrix.to_rows(),
            "det_drift": self.det_drift,
            "eigen": {
                "kind": e.kind.value,
                "sigma": e.sigma,
                "eigenvalues": [_num(z) for z in e.eigenvalues],
                "eigenrows": [None if r is None else [_num(c) for c in r] for r in e.eigenrows],
                "defective": e.defective,
            },
        }


def resolve_period(profile: BetaProfile, period: float | None = None) -> float:
    T = profile_period(profile)
    if T is None:
        if isinstance(profile, FromTheta):
            raise NotPeriodic("theta-designed profiles live on a symmetric interval, not a period")
        if isinstance(profile, (Constant, Sampled, Analytic)) and period is not None:
            T = period
        else:
            raise NotPeriodic(f"{type(profile).__name__} profile has no declared period")
    elif period is not None and not math.isclose(period, T, rel_tol=1e-12):
        raise NotPeriodic(f"requested period {period} differs from profile period {T}")
    if not T > 0:
        raise NotPeriodic("period must be positive")
    return float(T)


def monodromy(profile: BetaProfile, tau0: float = 0.0, cfg: IntegratorConfig = DEFAULT_CONFIG,
              period: float | None = None, tol_gamma: float = TOL_GAMMA) -> MonodromyReport:
    """One-period evolution ``u(tau0 + T, tau0)`` with its trace, class and spectrum.

    Constant profiles need ``period``; Sampled and Analytic profiles need
    either their own ``period`` or this argument.
    """
    T = resolve_period(profile, period)
    u = propagate(profile, tau0, tau0 + T, cfg)
    gamma = u.trace
    return MonodromyReport(
        gamma=gamma,
        motion_class=classify(gamma, tol_gamma),
        # det of a float64 product drifts like eps |u|^2 for strongly unstable orbits
        eigen=eigen(u, tol_det=MONODROMY_TOL_DET * max(1.0, u.max_abs() ** 2), tol_gamma=tol_gamma),
        tau0=tau0,
        matrix=u,
        period=T,
    )


def gamma_invariance_check(profile: BetaProfile, tau0_list: Sequence[float],
                           cfg: IntegratorConfig = DEFAULT_CONFIG,
                           period: float | None = None) -> float:
    """Largest pairwise spread of the monodromy trace over the starting times."""
    T = resolve_period(profile, period)
    gammas = [propagate(profile, t0, t0 + T, cfg).trace for t0 in tau0_list]
    return max(gammas) - min(gammas) if gammas else 0.0
