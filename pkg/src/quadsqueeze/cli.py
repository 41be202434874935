"""Command-line front end.

Exit codes: 0 ok, 2 usage / bad input, 3 numerical failure, 4 validation failure.
Every run echoes its resolved configuration as one JSON line on stderr (or
to ``--config-out``); data files carry the configuration without timestamps.
"""
from __future__ import annotations

import argparse
import ast
import datetime as _dt
import json
import math
import operator
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import outputs
from .errors import (EmptyResult, InvalidLambda, NoConvergence, NotEquidiagonal, NotPeriodic,
                     NotSymmetricProfile, NotSymplectic, OutOfDomain, SingularTheta,
                     ToleranceNotMet)
from .floquet import monodromy
from .propagator import IntegratorConfig, profile_from_json, profile_period, propagate, segment_matrix
from .sym2core import Mat2, det_drift, random_equidiagonal_symplectic

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INVALID = 0, 2, 3, 4

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def number(text: str) -> float:
    """Parse a real or a small arithmetic expression in ``pi`` such as ``4*pi/13``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError
    try:
        v = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _load_json(arg: str):
    """Inline JSON text, or a path to a JSON file."""
    s = arg.strip()
    if s.startswith("{") or s.startswith("["):
        return json.loads(s)
    return json.loads(Path(arg).read_text())


# ---------------------------------------------------------------- plumbing


class _Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out) if args.out else None

    @property
    def cfg(self) -> IntegratorConfig:
        a = self.args
        tol = a.tol if a.tol is not None else 1e-10
        return IntegratorConfig(method=a.method, rel_tol=tol, abs_tol=tol,
                                steps_per_period=a.steps_per_period)

    def config(self) -> dict:
        d = {k: v for k, v in vars(self.args).items() if k != "func"}
        d["integrator"] = vars(self.cfg)
        d["version"] = __version__
        return d

    def emit(self, name: str, text: str) -> None:
        """Write ``text`` to ``out/name`` when --out is a directory, else to stdout."""
        if self.out is None:
            sys.stdout.write(text)
            return
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text)

    def echo_config(self) -> None:
        d = self.config()
        d["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        line = json.dumps(d, sort_keys=True, default=str)
        if self.args.config_out:
            Path(self.args.config_out).write_text(line + "\n")
        else:
            sys.stderr.write(line + "\n")


def _wants(run: _Run, kind: str) -> bool:
    return run.args.format in (None, "all", kind)


# ---------------------------------------------------------------- commands


def cmd_scan(run: _Run) -> int:
    from .struttscan import GridSpec, find_squeeze_points, scan, trace_zero_curves

    a = run.args
    spec = GridSpec(tuple(a.beta0), tuple(a.beta1), tuple(a.interval))
    cfg = run.cfg
    header = {"command": "scan", "grid": spec.to_json(), "integrator": vars(cfg),
              "chunk": a.chunk}
    grid = scan(spec, cfg, workers=a.workers, chunk=a.chunk)
    red, blue, points = [], [], []
    if not a.no_curves and min(grid.shape) >= 2:
        for element, bucket in (("u12", red), ("u21", blue)):
            try:
                bucket.extend(trace_zero_curves(grid, element, cfg))
            except EmptyResult:
                pass
        points = find_squeeze_points(red, blue, cfg, interval=spec.interval)
    if _wants(run, "csv"):
        run.emit("grid.csv", outputs.grid_csv(grid, header))
        if run.out is not None:
            run.emit("curves.csv", outputs.curves_csv(red + blue, header))
    if _wants(run, "json") and (run.out is not None or a.format == "json"):
        run.emit("squeeze_points.json", outputs.json_text({
            "config": header,
            "squeeze_points": [p.to_dict() for p in points],
            "cell_errors": {f"{j},{i}": m for (j, i), m in sorted(grid.errors.items())},
        }))
    if _wants(run, "svg") and (run.out is not None or a.format == "svg"):
        run.emit("strutt.svg", outputs.strutt_svg(grid, red, blue, points, header))
    return EXIT_OK


def _profile(arg):
    return profile_from_json(_load_json(arg))


def cmd_propagate(run: _Run) -> int:
    a = run.args
    prof = _profile(a.profile)
    t0, t1 = a.interval
    u = propagate(prof, t0, t1, run.cfg)
    res = {"config": {"command": "propagate", "profile": _load_json(a.profile),
                      "interval": [t0, t1], "integrator": vars(run.cfg)},
           "u": u.to_rows(), "det_drift": det_drift(u)}
    period = a.period if a.period is not None else profile_period(prof)
    if period is not None:
        rep = monodromy(prof, t0, run.cfg, period=a.period)
        res["gamma"] = rep.gamma
        res["class"] = rep.motion_class.label
    run.emit("propagate.json", outputs.json_text(res))
    return EXIT_OK


def cmd_classify(run: _Run) -> int:
    a = run.args
    rep = monodromy(_profile(a.profile), a.tau0, run.cfg, period=a.period)
    res = rep.to_dict()
    res["config"] = {"command": "classify", "profile": _load_json(a.profile), "tau0": a.tau0,
                     "integrator": vars(run.cfg)}
    run.emit("classify.json", outputs.json_text(res))
    return EXIT_OK


def cmd_compose(run: _Run) -> int:
    from .pulsecraft import design_lambda, plan_product, symmetric_product, two_step_squeeze

    a = run.args
    cfgd = {"command": "compose"}
    if a.kappa1 is not None or a.kappa2 is not None:
        if a.kappa1 is None or a.kappa2 is None:
            raise argparse.ArgumentTypeError("--kappa1 and --kappa2 go together")
        plan = two_step_squeeze(a.kappa1, a.kappa2)
        cfgd.update(kappa1=a.kappa1, kappa2=a.kappa2)
    elif a.lam is not None:
        plan = design_lambda(a.lam)
        cfgd.update(target_lambda=a.lam)
    elif a.symmetric is not None:
        doc = _load_json(a.symmetric)
        core = Mat2.from_rows(doc["core"])
        wings = [Mat2.from_rows(w) for w in doc.get("wings", [])]
        u = symmetric_product(core, wings)
        cfgd.update(core=core.to_rows(), wings=[w.to_rows() for w in wings])
        run.emit("symmetric.json", outputs.json_text({"config": cfgd, "u": u.to_rows(),
                                                      "trace": u.trace, "det": u.det}))
        return EXIT_OK
    elif a.random_wings is not None:
        rng = np.random.default_rng(a.seed)
        core = random_equidiagonal_symplectic(rng, 2.0)
        wings = [segment_matrix(float(rng.uniform(-3, 3)), float(rng.uniform(0.05, 2.0)))
                 for _ in range(a.random_wings)]
        u = symmetric_product(core, wings)
        cfgd.update(seed=a.seed, random_wings=a.random_wings)
        run.emit("symmetric.json", outputs.json_text({
            "config": cfgd, "core": core.to_rows(), "wings": [w.to_rows() for w in wings],
            "u": u.to_rows(), "equidiagonal_gap": abs(u.u11 - u.u22)}))
        return EXIT_OK
    else:
        raise argparse.ArgumentTypeError(
            "one of --kappa1/--kappa2, --lambda, --symmetric, --random-wings is required")
    doc = plan.to_json()
    doc["config"] = cfgd
    doc["closed_form_residual"] = plan_product(plan).distance(plan.predicted)
    if a.check:
        u = propagate(plan.profile(), 0.0, plan.duration, run.cfg)
        doc["integrated"] = u.to_rows()
        doc["integrated_residual"] = u.distance(plan.predicted)
    run.emit("plan.json", outputs.json_text(doc))
    return EXIT_OK


def cmd_invert(run: _Run) -> int:
    from .thetainverse import beta_from_theta, theta_from_json, validate_theta, verify_roundtrip

    a = run.args
    doc = _load_json(a.theta)
    spec = theta_from_json(doc)
    cfgd = {"command": "invert", "theta": doc, "samples": a.samples, "probes": a.probes,
            "integrator": vars(run.cfg)}
    report = validate_theta(spec, a.probes)
    rep = report.to_dict()
    rep["config"] = cfgd
    if not report.valid:
        run.emit("validity.json", outputs.json_text(rep))
        sys.stderr.write(f"invalid theta: failed clause(s) {', '.join(report.failed_clauses)}\n")
        return EXIT_INVALID
    taus = np.linspace(0.0, spec.T, a.samples + 1)
    rows = [(t, beta_from_theta(spec, float(t))) for t in taus]
    rt = verify_roundtrip(spec, run.cfg)
    rep["roundtrip_residual"] = rt.residual
    rep["roundtrip_worst_tau"] = rt.worst_tau
    if run.out is None:
        sys.stdout.write(outputs.json_text(rep))
    else:
        run.emit("beta.csv", outputs.samples_csv(("tau", "beta"), rows, cfgd))
        run.emit("validity.json", outputs.json_text(rep))
    return EXIT_OK


def cmd_units(run: _Run) -> int:
    from . import unitsbridge as ub

    a = run.args
    if a.mode == "dimensionless":
        p = ub.TrapParams(a.charge, a.mass, a.r0, a.omega, a.phi0, a.phi1)
        b0, b1 = ub.dimensionless_from_physical(p)
        res = {"input": ub.trap_to_json(p), "beta0": b0, "beta1": b1, "period_s": p.period_s,
               "energy_scale_J": p.energy_scale_J}
    elif a.mode == "physical":
        phi0, phi1 = ub.physical_from_dimensionless(a.beta0, a.beta1, a.charge, a.mass, a.r0, a.omega)
        res = {"input": {"beta0": a.beta0, "beta1": a.beta1, "charge_C": a.charge,
                         "mass_kg": a.mass, "r0_m": a.r0, "omega_rad_s": a.omega},
               "phi0_V": phi0, "phi1_V": phi1}
    elif a.mode == "solenoid":
        c = ub.CylinderParams(a.omega, a.R, a.sigma)
        res = {"input": {"omega_rad_s": a.omega, "R_m": a.R, "sigma_C_m2": a.sigma},
               "B_G": ub.solenoid_field(c)}
    elif a.mode == "estimate":
        res = ub.trap_estimate(a.beta0, a.beta1, a.r0, a.energy_ev, a.wavelength)
    else:
        res = ub.belt_scenario(a.R, a.omega, a.belt_charge, a.belt_height)
    res = {"mode": a.mode, **res}
    run.emit("units.json", outputs.json_text(res))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "svg", "all"), default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=number, default=None, help="integrator rel/abs tolerance")
    common.add_argument("--method", choices=("adaptive", "fixed_magnus2", "fixed_rk4"),
                        default="adaptive")
    common.add_argument("--steps-per-period", type=_positive_int, default=256)
    common.add_argument("--config-out", help="write the config echo here instead of stderr")

    p = argparse.ArgumentParser(prog="quadsqueeze", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", parents=[common], help="Strutt-map scan of the Paul profile")
    s.add_argument("--beta0", nargs=3, type=number, default=[0.0, 2.0, 200],
                   metavar=("MIN", "MAX", "N"))
    s.add_argument("--beta1", nargs=3, type=number, default=[-1.6, 1.6, 200],
                   metavar=("MIN", "MAX", "N"))
    s.add_argument("--interval", nargs=2, type=number, default=[0.5 * math.pi, 2.5 * math.pi])
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--chunk", type=_positive_int, default=2048)
    s.add_argument("--no-curves", action="store_true")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("propagate", parents=[common], help="evolution matrix of a profile")
    s.add_argument("--profile", required=True, help="profile JSON text or file")
    s.add_argument("--interval", nargs=2, type=number, required=True)
    s.add_argument("--period", type=number, default=None)
    s.set_defaults(func=cmd_propagate)

    s = sub.add_parser("classify", parents=[common], help="monodromy, trace and motion class")
    s.add_argument("--profile", required=True)
    s.add_argument("--tau0", type=number, default=0.0)
    s.add_argument("--period", type=number, default=None)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("compose", parents=[common], help="squeezing plans and symmetric products")
    s.add_argument("--kappa1", type=number)
    s.add_argument("--kappa2", type=number)
    s.add_argument("--lambda", dest="lam", type=number)
    s.add_argument("--symmetric", help='JSON {"core": [[..],[..]], "wings": [...]}')
    s.add_argument("--random-wings", type=_positive_int)
    s.add_argument("--check", action="store_true", help="re-integrate the plan")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("invert", parents=[common], help="force from a prescribed theta")
    s.add_argument("--theta", required=True, help="theta JSON text or file")
    s.add_argument("--samples", type=_positive_int, default=100)
    s.add_argument("--probes", type=_positive_int, default=64)
    s.set_defaults(func=cmd_invert)

    from scipy import constants as sc
    s = sub.add_parser("units", parents=[common], help="laboratory units")
    s.add_argument("mode", choices=("dimensionless", "physical", "solenoid", "estimate", "belt"))
    s.add_argument("--charge", type=number, default=sc.e, help="C")
    s.add_argument("--mass", type=number, default=sc.m_p, help="kg")
    s.add_argument("--r0", type=number, default=0.10, help="m")
    s.add_argument("--omega", type=number, default=1.0, help="rad/s")
    s.add_argument("--phi0", type=number, default=0.0, help="V")
    s.add_argument("--phi1", type=number, default=0.0, help="V")
    s.add_argument("--beta0", type=number, default=4 * math.pi / 13)
    s.add_argument("--beta1", type=number, default=11 * math.pi / 41)
    s.add_argument("--R", type=number, default=0.20, help="m")
    s.add_argument("--sigma", type=number, default=0.0, help="C/m^2")
    s.add_argument("--energy-ev", type=number, default=1.04233)
    s.add_argument("--wavelength", type=number, default=3000.0, help="m")
    s.add_argument("--belt-charge", type=number, default=1.0, help="C per belt")
    s.add_argument("--belt-height", type=number, default=0.01, help="m")
    s.set_defaults(func=cmd_units)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    run = _Run(args)
    try:
        if args.tol is not None and not args.tol > 0:
            raise argparse.ArgumentTypeError("--tol must be positive")
        run.echo_config()
        return args.func(run)
    except (ToleranceNotMet, NoConvergence, NotSymplectic, FloatingPointError) as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    except (NotEquidiagonal, NotSymmetricProfile, InvalidLambda, SingularTheta) as exc:
        sys.stderr.write(f"validation failure: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID
    except (OutOfDomain, NotPeriodic, argparse.ArgumentTypeError, ValueError, KeyError,
            TypeError, OSError) as exc:
        sys.stderr.write(f"usage error: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
