"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import constants as sc

from quadsqueeze.cli import main
from quadsqueeze.floquet import monodromy
from quadsqueeze.propagator import (Analytic, Constant, IntegratorConfig, Paul,
                                    PiecewiseConstant, propagate, segment_matrix)
from quadsqueeze.pulsecraft import symmetric_product, two_step_squeeze
from quadsqueeze.struttscan import GridSpec, find_squeeze_points, reference_report, scan, trace_zero_curves
from quadsqueeze.sym2core import EigenKind, Mat2, anticommutator, random_equidiagonal_symplectic
from quadsqueeze.thetainverse import (PolyTheta, beta_from_theta, extract_theta, validate_theta,
                                      verify_roundtrip)
from quadsqueeze.unitsbridge import (PRINTED_PHI0_V, belt_scenario, dimensionless_from_physical,
                                     physical_from_dimensionless, trap_estimate, TrapParams)

VERDICTS: list[str] = []
REPORT_DIR = Path(__file__).resolve().parent.parent / "acceptance_reports"


def verdict(tag: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def test_ac1_reference_matrices():
    t = time.perf_counter()
    rep = reference_report()
    elapsed = time.perf_counter() - t
    if rep["discrepancy"]:
        REPORT_DIR.mkdir(exist_ok=True)
        (REPORT_DIR / "reference_matrices_discrepancy.json").write_text(
            json.dumps(rep, indent=2, sort_keys=True) + "\n")
        for name, case in rep["cases"].items():
            miss = [f"{r['entry']}={r['computed']:.4f} vs {r['printed']}" for r in case["entries"]
                    if not r["ok"]]
            print(f"  discrepancy {name}: {'; '.join(miss)}")
        ok = all(c["fallback_ok"] for c in rep["cases"].values())
        detail = ("printed entries not reproduced at tau0 = pi/2; discrepancy report emitted; "
                  "fallback det/class III/reciprocal checks " + ("hold" if ok else "FAIL"))
    else:
        ok = all(c["entries_ok"] for c in rep["cases"].values())
        detail = "all entries within 0.02 (near-zero within 0.01)"
    ok = ok and elapsed < 1.0
    verdict("AC1 reference matrices", ok, f"{detail}; {elapsed:.3f} s")


@pytest.fixture(scope="module")
def timed_default_scan():
    t = time.perf_counter()
    grid = scan(GridSpec())
    red = trace_zero_curves(grid, "u12")
    blue = trace_zero_curves(grid, "u21")
    pts = find_squeeze_points(red, blue)
    return pts, time.perf_counter() - t


def test_ac2_squeeze_point_localization(timed_default_scan):
    pts, elapsed = timed_default_scan
    target = (4 * math.pi / 13, 11 * math.pi / 41)
    near = [p for p in pts if math.hypot(p.beta0 - target[0], p.beta1 - target[1]) <= 0.05]
    upper_ok = any(abs(p.lam - 0.227) <= 0.01 for p in near)
    mirrored_ok = any(abs(p.lam - 4.394) <= 0.05 for p in pts
                      if math.hypot(p.beta0 - target[0], p.beta1 + target[1]) <= 0.05)
    found = ", ".join(f"({p.beta0:.4f}, {p.beta1:.4f}) lambda={p.lam:.4f}" for p in pts)
    verdict("AC2 squeeze points", upper_ok and mirrored_ok and elapsed < 60.0,
            f"found {found}; target ({target[0]:.4f}, +-{target[1]:.4f}) lambda 0.227 / 4.394; "
            f"{elapsed:.1f} s")


def _random_periodic(rng):
    kind = rng.integers(3)
    if kind == 0:
        return Constant(float(rng.uniform(-3, 3))), 2 * math.pi
    if kind == 1:
        return Paul(float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3))), None
    n = int(rng.integers(2, 6))
    segs = tuple((float(rng.uniform(0.05, 3)), float(rng.uniform(-3, 3))) for _ in range(n))
    return PiecewiseConstant(segs), None


def test_ac3_classification_properties():
    rng = np.random.default_rng(3)
    cfg = IntegratorConfig(rel_tol=1e-13, abs_tol=1e-13)
    worst_mod = worst_recip_scaled = worst_recip_abs = worst_gamma = 0.0
    counts = {"I": 0, "II": 0, "III": 0}
    bad = 0
    for _ in range(1000):
        prof, period = _random_periodic(rng)
        rep = monodromy(prof, 0.0, cfg, period=period)
        T = rep.period
        gammas = [rep.gamma] + [monodromy(prof, float(t0), cfg, period=period).gamma
                                for t0 in rng.uniform(0, T, 2)]
        worst_gamma = max(worst_gamma, max(gammas) - min(gammas))
        u = rep.matrix
        ev = np.linalg.eigvals(u.to_array())
        counts[rep.motion_class.label] += 1
        if rep.motion_class.label == "I":
            e = float(np.max(np.abs(np.abs(ev) - 1.0)))
            worst_mod = max(worst_mod, e)
            bad += e > 1e-9 or rep.eigen.kind is not EigenKind.COMPLEX_UNIT
        elif rep.motion_class.label == "III":
            r = abs(ev[0] * ev[1] - 1.0)
            # the product of eigenvalues is det(u); float64 rounding of det alone is ~eps |u|^2
            floor = max(1.0, u.max_abs() ** 2)
            worst_recip_abs = max(worst_recip_abs, float(r))
            worst_recip_scaled = max(worst_recip_scaled, float(r) / floor)
            bad += (r > 1e-9 * floor or np.any(np.abs(ev.imag) > 0)
                    or rep.eigen.kind is not EigenKind.REAL_RECIPROCAL)
    bad += worst_gamma > 1e-8
    verdict("AC3 classification", bad == 0,
            f"classes {counts}; max ||lambda|-1| {worst_mod:.1e}; reciprocal residual "
            f"{worst_recip_abs:.1e} abs / {worst_recip_scaled:.1e} per |u|^2; "
            f"max Gamma spread over tau0 {worst_gamma:.1e}")


def test_ac4_closed_forms():
    worst_rot = 0.0
    for k in (0.1, 0.5, 1.0, 2.0, 5.0):
        for t in np.linspace(0.0, 20.0, 11)[1:]:
            u = propagate(Constant(k * k), 0.0, float(t))
            c, s = math.cos(k * t), math.sin(k * t)
            worst_rot = max(worst_rot, u.distance(Mat2(c, s / k, -k * s, c)))
    worst_plan = 0.0
    for k1, k2 in ((1.0, 2.0), (2.0, 1.0), (0.5, 3.0), (1.0, 1.0), (3.0, 0.7), (1.0, 4.394)):
        plan = two_step_squeeze(k1, k2)
        prof = plan.profile()
        # generic ODE integration with the segment edges as kinks, not the exact product
        u = propagate(Analytic(prof, breakpoints=prof.breakpoints), 0.0, plan.duration)
        expect = Mat2(-k2 / k1, 0.0, 0.0, -k1 / k2)
        worst_plan = max(worst_plan, u.distance(expect))
    verdict("AC4 closed forms", worst_rot <= 1e-8 and worst_plan <= 1e-10,
            f"rotation max err {worst_rot:.1e} (<=1e-8); two-step max err {worst_plan:.1e} (<=1e-10)")


def _random_symmetric(rng):
    if rng.integers(2):
        c = rng.uniform(-1, 1, 4)
        c[0] = rng.uniform(-0.5, 2)
        w = rng.uniform(0.3, 3, 3)
        return Analytic(lambda t, c=c, w=w: c[0] + c[1] * np.cos(w[0] * t) + c[2] * np.cos(w[1] * t)
                        + c[3] * np.cos(w[2] * t) ** 2)
    # mirrored steps: edges at +-e_k
    edges = np.sort(rng.uniform(0.1, 2.5, 3))
    vals = rng.uniform(-1, 3, 4)

    def beta(t, edges=edges, vals=vals):
        return vals[np.searchsorted(edges, np.abs(t))]

    return Analytic(beta, breakpoints=tuple(np.concatenate([-edges, edges])))


def test_ac5_equidiagonality():
    rng = np.random.default_rng(5)
    worst_a = 0.0
    for _ in range(100):
        prof = _random_symmetric(rng)
        for T in rng.uniform(0.2, 3.0, 3):
            # ordinary two-sided propagation; the symmetric route would be equidiagonal by construction
            u = propagate(prof, -float(T), float(T))
            worst_a = max(worst_a, abs(u.u11 - u.u22))
    worst_b = 0.0
    for _ in range(200):
        core = random_equidiagonal_symplectic(rng, 2.0)
        wings = [segment_matrix(float(rng.uniform(-3, 3)), float(rng.uniform(0.05, 1.5)))
                 for _ in range(int(rng.integers(1, 6)))]
        u = symmetric_product(core, wings)
        worst_b = max(worst_b, abs(u.u11 - u.u22) / max(1.0, u.max_abs()))
    worst_c = 0.0
    for _ in range(1000):
        a, b = random_equidiagonal_symplectic(rng), random_equidiagonal_symplectic(rng)
        c = anticommutator(a, b)
        worst_c = max(worst_c, abs(c.u11 - c.u22) / max(1.0, c.max_abs()))
    verdict("AC5 equidiagonality", worst_a <= 1e-8 and worst_b <= 1e-12 and worst_c <= 1e-12,
            f"(a) {worst_a:.1e} (b) {worst_b:.1e} (c) {worst_c:.1e}")


def test_ac6_inverse_design():
    rng = np.random.default_rng(6)
    specs, rejected = [], 0
    while len(specs) < 50:
        coeffs = rng.uniform(-1, 1, 3) * np.array([0.3, 0.03, 0.003])
        spec = PolyTheta(tuple(coeffs), 2.0)
        if validate_theta(spec).valid:
            specs.append(spec)
        else:
            rejected += 1
    worst_rt = max(verify_roundtrip(s).residual for s in specs)

    worst_conv = 0.0
    for b0, b1, T in ((0.5, 0.2, 1.5), (0.3, -0.4, 2.0), (0.1, 0.05, 2.0)):
        p = Paul(b0, b1)
        th = extract_theta(p, T, 400)
        assert np.all(th.theta[1:] > 0)
        worst_conv = max(worst_conv, max(abs(beta_from_theta(th, float(t)) - p(t))
                                         for t in th.tau[1:-1]))

    # special points: the random specs plus analytic specs with Fourier points
    from quadsqueeze.thetainverse import SineTheta
    extra = [SineTheta(1 / 0.8, 1.6, 3.0), SineTheta(2.0, 1.0, 5.0), PolyTheta((-0.5,), 1.5)]
    worst_pt, n_pts, failed = 0.0, 0, 0
    for s in specs + extra:
        rep = validate_theta(s)
        for z in rep.zero_crossings:
            worst_pt = max(worst_pt, abs(abs(z.dtheta) - 2.0))
        for f in rep.fourier_points:
            worst_pt = max(worst_pt, f.residual)
        for q in rep.stationary_beta_points:
            worst_pt = max(worst_pt, abs(q.dbeta))
        n_pts += len(rep.zero_crossings) + len(rep.fourier_points) + len(rep.stationary_beta_points)
        failed += not rep.valid
    ok = worst_rt <= 1e-6 and worst_conv <= 1e-4 and worst_pt <= 1e-8 and failed == 0
    verdict("AC6 inverse design", ok,
            f"round trip max {worst_rt:.1e} over 50 specs ({rejected} candidates rejected); "
            f"converse max {worst_conv:.1e}; {n_pts} special points, max residual {worst_pt:.1e}")


def test_ac7_units():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(500):
        e, m, r0, w = 10 ** rng.uniform(-20, 0, 4)
        b0, b1 = rng.uniform(-5, 5, 2)
        phi0, phi1 = physical_from_dimensionless(b0, b1, e, m, r0, w)
        c0, c1 = dimensionless_from_physical(TrapParams(e, m, r0, w, phi0, phi1))
        worst = max(worst, abs(c0 - b0) / abs(b0), abs(c1 - b1) / abs(b1))
    est = trap_estimate()
    phi1_ok = abs(est["phi1_V"] - 1.759) <= 0.005
    # the printed phi0 does not follow from beta0 = 4 pi/13; the code must not reproduce it
    phi0_doc = (abs(est["phi0_V"] - PRINTED_PHI0_V) > 0.2
                and abs(est["phi0_V"] - est["beta0"] * 1.04233) < 1e-9)
    # a 3 km wave gives omega = 2 pi c / 3 km, i.e. ~41 eV, not the 1.04 eV scale
    wave_doc = abs(est["wave_energy_scale_eV"] / est["energy_scale_eV"] - 4 * math.pi ** 2) < 0.05
    belt = belt_scenario()
    K = 1.0 * (1.0 / (2 * math.pi)) / 0.01          # A/m, 1 C per 1 cm belt at 1 rad/s
    oracle_G = sc.mu_0 * K * 1e4
    belt_ok = abs(belt["B_belt_G"] - oracle_G) <= 1e-9 * oracle_G
    readings = f"belt {belt['B_belt_G']:.4f} G (SI oracle {oracle_G:.4f} G), proportional {belt['B_proportional_G']:.4f} G"
    ok = worst <= 1e-12 and phi1_ok and phi0_doc and wave_doc and belt_ok
    verdict("AC7 units", ok,
            f"round trip {worst:.1e}; phi1 {est['phi1_V']:.4f} V; phi0 {est['phi0_V']:.4f} V vs printed "
            f"{PRINTED_PHI0_V} (documented); 3 km wave scale {est['wave_energy_scale_eV']:.2f} eV "
            f"(documented); {readings}")


def test_ac8_determinism(tmp_path, capsys):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["scan", "--out", str(d)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    capsys.readouterr()
    same = outs[0] == outs[1] and set(outs[0]) == {"grid.csv", "curves.csv", "squeeze_points.json",
                                                   "strutt.svg"}
    verdict("AC8 determinism", same, f"{len(outs[0])} files byte-identical across two default scans")
