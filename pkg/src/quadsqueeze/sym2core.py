"""Real 2x2 evolution matrices and their symplectic / equidiagonal structure.

A :class:`Mat2` acts on the column ``(q, p)``.  Everything here is exact
arithmetic on four floats; no integration happens in this module.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import NotSymplectic

TOL_DET = 1e-9
TOL_GAMMA = 1e-9


@dataclass(frozen=True, slots=True)
class Mat2:
    u11: float
    u12: float
    u21: float
    u22: float

    def __post_init__(self) -> None:
        for name in ("u11", "u12", "u21", "u22"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite matrix entry {name}={v!r}")

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, a) -> "Mat2":
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.size != 4:
            raise ValueError(f"expected 4 entries, got {a.size}")
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @classmethod
    def from_rows(cls, rows) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(float(a), float(b), float(c), float(d))

    def to_array(self) -> np.ndarray:
        return np.array([[self.u11, self.u12], [self.u21, self.u22]])

    def to_rows(self) -> list[list[float]]:
        return [[self.u11, self.u12], [self.u21, self.u22]]

    def __iter__(self) -> Iterator[float]:
        return iter((self.u11, self.u12, self.u21, self.u22))

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return mul(self, other)

    def __add__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.u11 + other.u11, self.u12 + other.u12,
                    self.u21 + other.u21, self.u22 + other.u22)

    def scale(self, s: float) -> "Mat2":
        return Mat2(s * self.u11, s * self.u12, s * self.u21, s * self.u22)

    @property
    def trace(self) -> float:
        return self.u11 + self.u22

    @property
    def det(self) -> float:
        return det(self)

    def inverse(self) -> "Mat2":
        """Symplectic inverse: swap the diagonal, negate the off-diagonal.

        Exact for det = 1; for other matrices it is the adjugate.
        """
        return Mat2(self.u22, -self.u12, -self.u21, self.u11)

    def max_abs(self) -> float:
        return max(abs(self.u11), abs(self.u12), abs(self.u21), abs(self.u22))

    def distance(self, other: "Mat2") -> float:
        """Entry-wise infinity norm of the difference."""
        return max(abs(x - y) for x, y in zip(self, other))


def mul(a: Mat2, b: Mat2) -> Mat2:
    return Mat2(
        a.u11 * b.u11 + a.u12 * b.u21,
        a.u11 * b.u12 + a.u12 * b.u22,
        a.u21 * b.u11 + a.u22 * b.u21,
        a.u21 * b.u12 + a.u22 * b.u22,
    )


def product(*mats: Mat2) -> Mat2:
    """Left-to-right matrix product ``mats[0] @ mats[1] @ ...``."""
    out = Mat2.identity()
    for m in mats:
        out = mul(out, m)
    return out


def det(a: Mat2) -> float:
    return a.u11 * a.u22 - a.u12 * a.u21


def det_drift(a: Mat2) -> float:
    return abs(det(a) - 1.0)


def is_symplectic(a: Mat2, tol: float = TOL_DET) -> bool:
    return det_drift(a) <= tol


def is_equidiagonal(a: Mat2, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return abs(a.u11 - a.u22) <= tol


def anticommutator(a: Mat2, b: Mat2) -> Mat2:
    return mul(a, b) + mul(b, a)


class EigenKind(enum.Enum):
    COMPLEX_UNIT = "ComplexUnit"
    REAL_UNIT = "RealUnit"
    REAL_RECIPROCAL = "RealReciprocal"


@dataclass(frozen=True)
class EigenStructure:
    """Spectral data of a symplectic 2x2 matrix.

    ``eigenvalues`` and ``eigenrows`` are aligned: ``eigenrows[k]`` is a left
    eigenvector for ``eigenvalues[k]``.  For real kinds the contracting
    eigenvalue comes first; for ``COMPLEX_UNIT`` the ``e^{+i sigma}`` one.
    ``defective`` marks a threshold matrix that is not +-identity, whose two
    rows then coincide.
    """

    kind: EigenKind
    sigma: float
    eigenvalues: tuple
    eigenrows: tuple
    defective: bool = False

    @property
    def contracting_row(self):
        return self.eigenrows[0]

    @property
    def expanding_row(self):
        return self.eigenrows[1]


def _normalize_row(cq, cp):
    # scale to max |c| = 1, then make the first non-negligible coefficient positive (real)
    m = max(abs(cq), abs(cp))
    if m == 0.0:
        raise ArithmeticError("zero eigenrow")
    cq, cp = cq / m, cp / m
    lead = cq if abs(cq) > 1e-14 else cp
    if isinstance(lead, complex):
        phase = lead / abs(lead)
        cq, cp = cq / phase, cp / phase
        # clean rounding residue on the now-real lead coefficient
        if abs(cq) > 1e-14:
            cq = complex(cq.real, 0.0)
        else:
            cp = complex(cp.real, 0.0)
        return cq, cp
    if lead < 0:
        cq, cp = -cq, -cp
    return cq + 0.0, cp + 0.0


def left_eigenrow(a: Mat2, lam):
    """Row ``r`` with ``r @ a = lam * r``, normalized as documented."""
    # two candidate solutions of r (a - lam) = 0; keep the better-conditioned one
    r1 = (a.u21, lam - a.u11)
    r2 = (a.u22 - lam, -a.u12)
    n1 = max(abs(r1[0]), abs(r1[1]))
    n2 = max(abs(r2[0]), abs(r2[1]))
    r = r1 if n1 >= n2 else r2
    if max(n1, n2) <= 1e-300:
        # a == lam * I: every row is an eigenrow
        return None
    if isinstance(lam, complex):
        r = (complex(r[0]), complex(r[1]))
    return _normalize_row(*r)


def eigen(a: Mat2, tol_det: float = TOL_DET, tol_gamma: float = TOL_GAMMA) -> EigenStructure:
    d = det(a)
    if abs(d - 1.0) > tol_det:
        raise NotSymplectic(f"|det - 1| = {abs(d - 1.0):.3e} exceeds {tol_det:.1e}")
    gamma = a.trace
    excess = abs(gamma) - 2.0

    if abs(excess) <= tol_gamma:
        s = 1.0 if gamma > 0 else -1.0
        scalar = abs(a.u12) <= tol_gamma and abs(a.u21) <= tol_gamma and abs(a.u11 - a.u22) <= tol_gamma
        if scalar:
            rows = ((1.0, 0.0), (0.0, 1.0))
        else:
            r = left_eigenrow(a, s)
            rows = (r, r)
        return EigenStructure(EigenKind.REAL_UNIT, 0.0, (s, s), rows, defective=not scalar)

    if excess < 0:
        sigma = math.acos(gamma / 2.0)
        lam_p = cmath.exp(1j * sigma)
        lam_m = cmath.exp(-1j * sigma)
        return EigenStructure(
            EigenKind.COMPLEX_UNIT, sigma, (lam_p, lam_m),
            (left_eigenrow(a, lam_p), left_eigenrow(a, lam_m)),
        )

    sigma = math.acosh(abs(gamma) / 2.0)
    # roots of the actual characteristic polynomial, stable form
    s = 1.0 if gamma > 0 else -1.0
    big = 0.5 * (gamma + s * math.sqrt(gamma * gamma - 4.0 * d))
    small = d / big
    return EigenStructure(
        EigenKind.REAL_RECIPROCAL, sigma, (small, big),
        (left_eigenrow(a, small), left_eigenrow(a, big)),
    )


def eigenrow_residual(a: Mat2, row, lam) -> float:
    cq, cp = row
    rq = cq * a.u11 + cp * a.u21 - lam * cq
    rp = cq * a.u12 + cp * a.u22 - lam * cp
    return max(abs(rq), abs(rp))


def random_symplectic(rng: np.random.Generator, scale: float = 5.0) -> Mat2:
    """Random det-1 matrix with entries of order ``scale``."""
    while True:
        a, b, c = rng.uniform(-scale, scale, size=3)
        if abs(a) > 0.05:
            return Mat2(a, b, c, (1.0 + b * c) / a)


def random_equidiagonal_symplectic(rng: np.random.Generator, scale: float = 5.0) -> Mat2:
    """Random det-1 matrix with ``u11 == u22`` (needs ``u12 * u21 = u11**2 - 1``)."""
    while True:
        a, b = rng.uniform(-scale, scale, size=2)
        if abs(b) > 0.05:
            c = (a * a - 1.0) / b
            if abs(c) <= scale * 4:
                return Mat2(a, b, c, a)
