"""Laboratory units for the Paul-trap scan and the rotating-cylinder solenoid.

Public quantities are SI.  Gaussian units appear only inside
:func:`solenoid_field`, which returns gauss.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy import constants as sc

from .errors import NonPositiveScale

STATC_PER_C = 10.0 * sc.c          # 1 C = 2.99792458e9 statC
C_CGS = 100.0 * sc.c               # cm/s
GAUSS_PER_TESLA = 1e4

# printed figures of the trap estimate
PRINTED_ENERGY_EV = 1.04233
PRINTED_VOLT_PER_BETA = 1.0423
PRINTED_PHI0_V = 1.268
PRINTED_PHI1_V = 1.759
PRINTED_WAVELENGTH_M = 3000.0
PRINTED_B_GAUSS = 1.25


@dataclass(frozen=True)
class TrapParams:
    charge_C: float
    mass_kg: float
    r0_m: float
    omega_rad_s: float
    phi0_V: float = 0.0
    phi1_V: float = 0.0

    def __post_init__(self):
        for name in ("charge_C", "mass_kg", "r0_m", "omega_rad_s"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise NonPositiveScale(f"{name} must be positive, got {v}")

    @property
    def period_s(self) -> float:
        return 2.0 * math.pi / self.omega_rad_s

    @property
    def energy_scale_J(self) -> float:
        return energy_scale(self.mass_kg, self.r0_m, self.omega_rad_s)


@dataclass(frozen=True)
class CylinderParams:
    omega_rad_s: float
    R_m: float
    sigma_C_m2: float

    def __post_init__(self):
        if not self.R_m > 0:
            raise NonPositiveScale("R must be positive")


def energy_scale(mass_kg: float, r0_m: float, omega_rad_s: float) -> float:
    """``omega**2 r0**2 m`` in joules."""
    return omega_rad_s ** 2 * r0_m ** 2 * mass_kg


def dimensionless_from_physical(p: TrapParams) -> tuple[float, float]:
    scale = p.energy_scale_J
    if not scale > 0:
        raise NonPositiveScale("omega^2 r0^2 m must be positive")
    beta0 = p.charge_C * p.phi0_V / scale
    beta1 = p.charge_C * p.phi1_V / (2.0 * scale)
    return beta0, beta1


def physical_from_dimensionless(beta0: float, beta1: float, charge_C: float, mass_kg: float,
                                r0_m: float, omega_rad_s: float) -> tuple[float, float]:
    for name, v in (("charge_C", charge_C), ("mass_kg", mass_kg), ("r0_m", r0_m),
                    ("omega_rad_s", omega_rad_s)):
        if not v > 0:
            raise NonPositiveScale(f"{name} must be positive, got {v}")
    volts = energy_scale(mass_kg, r0_m, omega_rad_s) / charge_C
    return beta0 * volts, 2.0 * beta1 * volts


def omega_for_energy_scale(energy_J: float, mass_kg: float, r0_m: float) -> float:
    """Drive frequency giving ``omega**2 r0**2 m = energy_J``."""
    return math.sqrt(energy_J / (mass_kg * r0_m ** 2))


def omega_from_wavelength(wavelength_m: float) -> float:
    """Angular frequency of a radio wave, ``2 pi c / wavelength``."""
    return 2.0 * math.pi * sc.c / wavelength_m


def solenoid_field(c: CylinderParams) -> float:
    """``B = 4 pi omega R sigma / c`` in gauss, with SI inputs converted to CGS."""
    R_cm = 100.0 * c.R_m
    sigma_cgs = c.sigma_C_m2 * STATC_PER_C / 1e4
    return 4.0 * math.pi / C_CGS * c.omega_rad_s * R_cm * sigma_cgs


def belt_sigma(charge_C: float, belt_height_m: float, R_m: float) -> float:
    """Surface density of a belt of height h around radius R carrying ``charge_C``."""
    return charge_C / (2.0 * math.pi * R_m * belt_height_m)


def proportional_sigma(charge_C: float, belt_height_m: float, R_m: float) -> float:
    """The reading ``charge = R sigma h`` (no 2 pi), i.e. sigma = Q / (R h)."""
    return charge_C / (R_m * belt_height_m)


def belt_field_si(charge_C: float, belt_height_m: float, omega_rad_s: float) -> float:
    """``mu0 K`` in gauss, K = charge passing per second per unit height."""
    K = charge_C * (omega_rad_s / (2.0 * math.pi)) / belt_height_m
    return sc.mu_0 * K * GAUSS_PER_TESLA


def belt_scenario(R_m: float = 0.20, omega_rad_s: float = 1.0, charge_C: float = 1.0,
                  belt_height_m: float = 0.01) -> dict:
    """Solenoid field of a rotating charged cylinder under both sigma readings."""
    s_belt = belt_sigma(charge_C, belt_height_m, R_m)
    s_prop = proportional_sigma(charge_C, belt_height_m, R_m)
    return {
        "R_m": R_m,
        "omega_rad_s": omega_rad_s,
        "charge_per_belt_C": charge_C,
        "belt_height_m": belt_height_m,
        "sigma_belt_C_m2": s_belt,
        "B_belt_G": solenoid_field(CylinderParams(omega_rad_s, R_m, s_belt)),
        "B_si_oracle_G": belt_field_si(charge_C, belt_height_m, omega_rad_s),
        "sigma_proportional_C_m2": s_prop,
        "B_proportional_G": solenoid_field(CylinderParams(omega_rad_s, R_m, s_prop)),
        "B_printed_G": PRINTED_B_GAUSS,
    }


def trap_estimate(beta0: float = 4.0 * math.pi / 13.0, beta1: float = 11.0 * math.pi / 41.0,
                  r0_m: float = 0.10, energy_eV: float = PRINTED_ENERGY_EV,
                  wavelength_m: float = PRINTED_WAVELENGTH_M) -> dict:
    """Proton voltages at a given energy scale, with the printed figures alongside.

    The drive frequency is chosen to hit ``energy_eV``; the frequency of a
    radio wave of ``wavelength_m`` and its own energy scale are reported
    separately, since the two do not agree.
    """
    m = sc.m_p
    e = sc.e
    energy_J = energy_eV * sc.eV
    omega = omega_for_energy_scale(energy_J, m, r0_m)
    phi0, phi1 = physical_from_dimensionless(beta0, beta1, e, m, r0_m, omega)
    omega_wave = omega_from_wavelength(wavelength_m)
    wave_energy_eV = energy_scale(m, r0_m, omega_wave) / sc.eV
    return {
        "beta0": beta0,
        "beta1": beta1,
        "r0_m": r0_m,
        "mass_kg": m,
        "charge_C": e,
        "energy_scale_eV": energy_eV,
        "omega_rad_s": omega,
        "period_s": 2.0 * math.pi / omega,
        "phi0_V": phi0,
        "phi1_V": phi1,
        "phi0_printed_V": PRINTED_PHI0_V,
        "phi1_printed_V": PRINTED_PHI1_V,
        "wavelength_m": wavelength_m,
        "omega_wave_rad_s": omega_wave,
        "wave_energy_scale_eV": wave_energy_eV,
        "discrepancies": {
            "phi0_V": phi0 - PRINTED_PHI0_V,
            "wave_energy_scale_ratio": wave_energy_eV / energy_eV,
        },
    }


def trap_to_json(p: TrapParams) -> dict:
    return asdict(p)
