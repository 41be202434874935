"""Evolution matrices of time-dependent quadratic Hamiltonians: propagation,
stability classes, Strutt-map scans, squeezing plans and exact inverse design."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .sym2core import Mat2, EigenKind, EigenStructure, eigen, is_equidiagonal, is_symplectic  # noqa: E402
from .propagator import (IntegratorConfig, Constant, Paul, PiecewiseConstant, Sampled,  # noqa: E402
                         Analytic, FromTheta, propagate, propagate_symmetric)
from .floquet import MotionClass, classify, monodromy  # noqa: E402
