"""Command-line surface.

Subcommands: evolve, scan, design, shadow, units, solenoid.  All outputs
are deterministic: CSV files carry a single header row naming columns (and
units where they apply), JSON reports carry schema_version.  Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 validation
failure.

Angles and times may be given as decimals or as pi fractions ("pi/2",
"5pi/2", "-3pi/4"), parsed exactly.

Profiles are JSON objects passed inline or as a file path:

    {"kind": "constant", "beta": 1.0}
    {"kind": "mathieu", "beta0": 1.217, "beta1": 0.844}
    {"kind": "theta", "b": 2.0, "beta0": 0.0, "offset": 0.0}
    {"kind": "sampled", "tau": [...], "beta": [...], "order": 3}
    {"kind": "composite", "pieces": [{"from": a, "to": b, "profile": {...}}]}

A JSON file of defaults can be supplied with --config; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from contextlib import contextmanager

import numpy as np

from . import design, evolution, mathieu, packets, physical
from .core import CanonicalState, profile_from_dict
from .design import SingularityError
from .evolution import IntegrationError, IntegratorConfig
from .mathieu import ConvergenceError

SCHEMA_VERSION = 1

_PI_RE = re.compile(
    r"^\s*([+-]?)\s*(\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?|\.\d+))?\s*$",
    re.IGNORECASE,
)


def parse_angle(text: str) -> float:
    """Decimal or exact pi fraction: '1.57', 'pi/2', '-5pi/2', '2*pi/3'."""
    m = _PI_RE.match(text)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        den = float(m.group(3)) if m.group(3) else 1.0
        return sign * coef * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"cannot parse angle/time {text!r}") from None


def _load_profile(source: str):
    source = source.strip()
    if source.startswith("{"):
        return profile_from_dict(json.loads(source))
    with open(source, "r") as fh:
        return profile_from_dict(json.load(fh))


def _integrator_config(args) -> IntegratorConfig:
    return IntegratorConfig(
        method=args.method,
        steps=args.steps,
        rtol=args.rtol,
        atol=args.atol,
    )


def _add_integrator_flags(p: argparse.ArgumentParser):
    p.add_argument("--method", choices=("rk4", "adaptive"), default="rk4",
                   help="integrator (default fixed-step rk4)")
    p.add_argument("--steps", type=int, default=20000,
                   help="RK4 steps per interval (default 20000)")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _emit_json(obj: dict, path):
    obj = dict(obj)
    obj["schema_version"] = SCHEMA_VERSION
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    with _open_out(path) as fh:
        fh.write(text)


def _matrix_entries(u) -> list:
    return [u.u11, u.u12, u.u21, u.u22]


# ---------------------------------------------------------------------------
# evolve


def cmd_evolve(args) -> int:
    profile = _load_profile(args.profile)
    t0 = parse_angle(getattr(args, "from"))
    t1 = parse_angle(args.to)
    cfg = _integrator_config(args)
    u = evolution.integrate(profile, t0, t1, cfg)
    rep = evolution.classify(u)
    out = {
        "matrix": _matrix_entries(u),
        "det": u.det,
        "Gamma": rep.gamma,
        "zone": rep.zone,
        "interval": [t0, t1],
    }
    if rep.zone == "III":
        out["lambda_plus"] = rep.lam_plus.real
        out["lambda_minus"] = rep.lam_minus.real
        out["a_plus"] = list(rep.a_plus)
        out["a_minus"] = list(rep.a_minus)
    _emit_json(out, args.output)
    return 0


# ---------------------------------------------------------------------------
# scan


def _parse_rect(args) -> mathieu.ScanRect:
    lo0, hi0, lo1, hi1 = (float(x) for x in args.rect.split(","))
    n0, n1 = (int(x) for x in args.grid.split(","))
    return mathieu.ScanRect(
        lo0, hi0, lo1, hi1, n0=n0, n1=n1,
        tau0=parse_angle(getattr(args, "from")),
        tau1=parse_angle(args.to),
    )


def cmd_scan(args) -> int:
    cfg = _integrator_config(args)
    if args.double_zero:
        if not args.seed:
            raise ValueError("--double-zero needs --seed beta0,beta1")
        b0, b1 = (float(x) for x in args.seed.split(","))
        res = mathieu.find_double_zero(
            (b0, b1), cfg,
            tau0=parse_angle(getattr(args, "from")),
            tau1=parse_angle(args.to),
        )
        _emit_json({
            "beta0": res.beta0,
            "beta1": res.beta1,
            "matrix": _matrix_entries(res.u),
            "iterations": res.iterations,
            "seed": [b0, b1],
        }, args.output)
        return 0
    rect = _parse_rect(args)
    if args.locus:
        points = mathieu.trace_locus(rect, args.locus, cfg)
        with _open_out(args.output) as fh:
            mathieu.write_locus_csv(points, fh)
        return 0
    result = mathieu.scan_grid(rect, cfg)
    with _open_out(args.output) as fh:
        mathieu.write_scan_csv(result, fh)
    return 0


# ---------------------------------------------------------------------------
# design


def cmd_design(args) -> int:
    if args.b == 0.0:
        raise ValueError("--b must be nonzero")
    bs = [args.b]
    if args.chain:
        bs.extend(float(x) for x in args.chain.split(","))
    ansatzes = [design.solve_theta_coeffs(b, args.beta0) for b in bs]

    lemma_reports = []
    for a in ansatzes:
        rep = design.validate_lemma(a)
        lemma_reports.append(rep)
    tail = None
    if args.tail:
        if args.beta0 <= 0:
            raise ValueError("--tail needs --beta0 > 0 (quarter-period duration)")
        duration = args.tail_duration if args.tail_duration else design.quarter_period(args.beta0)
        tail = design.ConstantTail(beta0=args.beta0, duration=duration)
    pulse = design.build_chain(ansatzes, tail)
    cfg = _integrator_config(args)
    report = design.verify_design(pulse, cfg)

    out = {
        "profile": pulse.profile.to_json_dict(),
        "interval": list(pulse.interval),
        "stages": [
            {"b": a.b, "beta0": a.beta0, "a1": a.a1, "a3": a.a3, "a5": a.a5}
            for a in ansatzes
        ],
        "tail": (
            {"beta0": tail.beta0, "duration": tail.duration} if tail else None
        ),
        "joins": [
            {
                "tau": j.tau,
                "left": list(j.left),
                "right": list(j.right),
                "jumps": list(j.jumps),
                "within_tol": list(j.ok),
            }
            for j in pulse.joins
        ],
        "lemma": [
            {
                "violations": list(rep.violations),
                "fourier_points": [
                    {"tau": f.tau, "b": f.b, "beta": f.beta,
                     "beta_prime": f.beta_prime}
                    for f in rep.fourier_points
                ],
            }
            for rep in lemma_reports
        ],
        "verification": report.to_json_dict(),
    }
    _emit_json(out, args.output)

    if args.samples_out:
        taus = np.linspace(pulse.interval[0], pulse.interval[1], args.samples)
        betas = pulse.profile.beta_array(taus)
        with _open_out(args.samples_out) as fh:
            fh.write("tau,beta\n")
            for t, b in zip(taus, betas):
                fh.write("%.12g,%.12g\n" % (t, b))

    violations = [v for rep in lemma_reports for v in rep.violations]
    if violations or not report.ok:
        return 4
    return 0


# ---------------------------------------------------------------------------
# shadow


def cmd_shadow(args) -> int:
    profile = _load_profile(args.profile)
    lo, hi = profile.domain()
    t0 = parse_angle(getattr(args, "from")) if getattr(args, "from") else lo
    t1 = parse_angle(args.to) if args.to else hi
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise ValueError("profile domain is unbounded; pass --from/--to")
    taus = np.linspace(t0, t1, args.points)
    cfg = _integrator_config(args)
    if args.inits:
        states = []
        for chunk in args.inits.split(";"):
            q, p = (float(x) for x in chunk.split(","))
            states.append(CanonicalState(q, p))
        result = packets.congruence(profile, states, taus, cfg)
        with _open_out(args.output) as fh:
            packets.write_congruence_csv(result, fh)
        return 0
    init = packets.gaussian_init(args.kappa, args.q0, args.p0)
    result = packets.shadow(profile, init, taus, cfg, belt_radius=args.belt)
    if args.format == "json":
        _emit_json({
            "rows": [list(r) for r in result.rows()],
            "max_delta_q": result.max_delta_q,
            "within_belt": result.within_belt,
            "belt_radius": result.belt_radius,
        }, args.output)
    else:
        with _open_out(args.output) as fh:
            packets.write_shadow_csv(result, fh)
    return 0


# ---------------------------------------------------------------------------
# units


def _context_from_args(args) -> physical.PhysicalContext:
    if args.particle == "proton":
        m, e = physical.M_PROTON, physical.E_CHARGE
    else:
        if args.mass is None or args.charge is None:
            raise ValueError("custom particle needs --mass (g) and --charge (esu)")
        m, e = args.mass, args.charge
    return physical.PhysicalContext(m=m, e=e, r0=args.r0, T=args.T)


def cmd_units(args) -> int:
    ctx = _context_from_args(args)
    if args.table:
        t_list = [float(x) for x in args.t_list.split(",")]
        base = {}
        if args.base_phi is not None:
            base["Phi"] = args.base_phi
        if args.base_b is not None:
            base["B"] = args.base_b
        if args.base_ratio is not None:
            base["ratio"] = args.base_ratio
        table = physical.scaling_table(ctx, base, args.t_ref, t_list)
        with _open_out(args.output) as fh:
            cols = ",".join("T=%.12g" % t for t in table["T"])
            fh.write("quantity," + cols + "\n")
            units_of = {"q": "cm", "p": "g cm/s", "v": "cm/s",
                        "Phi": "V", "B": "G", "ratio": "1"}
            for key in ("q", "p", "v", "Phi", "B", "ratio"):
                if key in table:
                    row = ",".join("%.12g" % v for v in table[key])
                    fh.write(f"{key} [{units_of[key]}],{row}\n")
        return 0
    phi0, phi1 = physical.paul_voltages(ctx, args.beta0, args.beta1, args.omega)
    out = {
        "particle": args.particle,
        "r0_cm": ctx.r0,
        "T_s": ctx.T,
        "omega_per_s": args.omega,
        "omega_note": (
            "omega is taken as the cyclic rate matching the quoted radio "
            "wavelength (c/lambda), not 2 pi c/lambda"
        ),
        "energy_scale_ev": physical.trap_energy_ev(ctx, args.omega),
        "beta0": args.beta0,
        "beta1": args.beta1,
        "phi0_volt": phi0,
        "phi1_volt": phi1,
        "length_scale_cm": ctx.length_scale,
        "momentum_scale_g_cm_s": ctx.momentum_scale,
    }
    _emit_json(out, args.output)
    return 0


# ---------------------------------------------------------------------------
# solenoid


def _parse_qlin(text: str) -> float:
    text = text.strip()
    if text.lower().endswith("c"):
        return float(text[:-1]) * physical.ESU_PER_COULOMB
    return float(text)


def cmd_solenoid(args) -> int:
    ctx = _context_from_args(args)
    if args.cylinder:
        if args.qlin is None:
            raise ValueError("--cylinder needs --qlin (charge per cm, e.g. '1C')")
        q_lin = _parse_qlin(args.qlin)
        b = physical.rotating_cylinder_field(
            args.omega, q_lin, standard_convention=args.standard
        )
        _emit_json({
            "B_gauss": b,
            "omega_per_s": args.omega,
            "q_lin_esu_per_cm": q_lin,
            "convention": "standard (2 omega Q/c)" if args.standard
                          else "literal (4 pi omega Q/c)",
        }, args.output)
        return 0
    # radial correction of a cosine-driven axis field
    w = args.field_omega

    def b_fn(tau, d=0):
        phase = w * ctx.T * tau + d * math.pi / 2.0
        return args.amp * (w * ctx.T) ** d * math.cos(phase)

    value = physical.solenoid_correction(b_fn, args.r, args.tau, ctx, order=args.order)
    _emit_json({
        "B_corrected_gauss": value,
        "B_axis_gauss": b_fn(args.tau, 0),
        "r_cm": args.r,
        "tau": args.tau,
        "order": args.order,
        "coefficients": [physical.solenoid_coefficient(k) for k in range(args.order + 1)],
    }, args.output)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser(defaults: dict = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softsqueeze",
        description="Soft squeezing pulses in time-dependent quadratic traps: "
                    "evolution, stability scans, inverse design, moment "
                    "transport, unit estimates.",
    )
    parser.add_argument("--config", help="JSON file of flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = []

    def add_command(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        subparsers.append(p)
        return p

    p = add_command("evolve", help="integrate the evolution matrix over an interval")
    p.add_argument("--profile", required=True, help="profile JSON (inline or file path)")
    p.add_argument("--from", required=True, help="interval start (decimal or pi fraction)")
    p.add_argument("--to", required=True, help="interval end")
    p.add_argument("--output", help="output path (default stdout)")
    _add_integrator_flags(p)
    p.set_defaults(handler=cmd_evolve)

    p = add_command("scan", help="scan the (beta0, beta1) plane; trace loci; refine double zeros")
    p.add_argument("--rect", default="0.9,1.9,0.5,1.6",
                   help="beta0_lo,beta0_hi,beta1_lo,beta1_hi (default second tongue box)")
    p.add_argument("--grid", default="200,200", help="n0,n1 grid counts")
    p.add_argument("--from", default="pi/2", help="interval start (default pi/2)")
    p.add_argument("--to", default="5pi/2", help="interval end (default 5pi/2)")
    p.add_argument("--locus", choices=("u12", "u21"),
                   help="emit the vanishing locus of this entry instead of the full grid")
    p.add_argument("--double-zero", action="store_true",
                   help="refine the simultaneous zero of u12 and u21 from --seed")
    p.add_argument("--seed", help="beta0,beta1 seed for --double-zero")
    p.add_argument("--output", help="output path (default stdout)")
    _add_integrator_flags(p)
    p.set_defaults(handler=cmd_scan)

    p = add_command("design", help="solve a soft pulse from (b, beta0); verify it")
    p.add_argument("--b", type=float, required=True, help="target squeezed-Fourier magnitude")
    p.add_argument("--beta0", type=float, default=0.0, help="edge stiffness (default 0)")
    p.add_argument("--chain", help="comma list of further stage magnitudes")
    p.add_argument("--tail", action="store_true",
                   help="append a constant-beta0 tail (quarter period by default)")
    p.add_argument("--tail-duration", type=float, default=None)
    p.add_argument("--samples", type=int, default=501, help="rows in the beta samples CSV")
    p.add_argument("--samples-out", help="path for the beta(tau) samples CSV")
    p.add_argument("--output", help="report path (default stdout)")
    _add_integrator_flags(p)
    p.set_defaults(handler=cmd_design)

    p = add_command("shadow", help="moment transport: uncertainty shadow or trajectory congruence")
    p.add_argument("--profile", required=True, help="profile JSON (inline or file path)")
    p.add_argument("--from", default=None, help="grid start (default: profile domain)")
    p.add_argument("--to", default=None, help="grid end")
    p.add_argument("--points", type=int, default=201, help="grid size (default 201)")
    p.add_argument("--kappa", type=float, default=1.0, help="initial Gaussian width")
    p.add_argument("--q0", type=float, default=0.0)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--inits", help="semicolon list 'q,p;q,p;...' for a congruence run")
    p.add_argument("--belt", type=float, default=10.0, help="display belt radius")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="output path (default stdout)")
    _add_integrator_flags(p)
    p.set_defaults(handler=cmd_shadow)

    p = add_command("units", help="laboratory magnitudes for a context particle")
    p.add_argument("--particle", choices=("proton", "custom"), default="proton")
    p.add_argument("--mass", type=float, help="custom particle mass (g)")
    p.add_argument("--charge", type=float, help="custom particle charge (esu)")
    p.add_argument("--r0", type=float, default=10.0, help="trap radius (cm, default 10)")
    p.add_argument("--T", type=float, default=1.0, help="time scale (s, default 1)")
    p.add_argument("--omega", type=float, default=1e5,
                   help="drive rate (1/s, default 1e5: the long-radio-wave convention)")
    p.add_argument("--beta0", type=float, default=1.217)
    p.add_argument("--beta1", type=float, default=0.844)
    p.add_argument("--table", action="store_true", help="emit the scaling table CSV")
    p.add_argument("--t-list", default="0.001,1,100", help="table column time scales")
    p.add_argument("--t-ref", type=float, default=1.0, help="reference T for base values")
    p.add_argument("--base-phi", type=float, help="Phi max at t-ref (V)")
    p.add_argument("--base-b", type=float, help="B max at t-ref (G)")
    p.add_argument("--base-ratio", type=float, help="radiative ratio at t-ref")
    p.add_argument("--output", help="output path (default stdout)")
    p.set_defaults(handler=cmd_units)

    p = add_command("solenoid", help="solenoid radial corrections / rotating-cylinder field")
    p.add_argument("--cylinder", action="store_true", help="rotating charged cylinder estimate")
    p.add_argument("--omega", type=float, default=1.0, help="rotation rate (1/s)")
    p.add_argument("--qlin", help="charge per cm of axial length ('1C' or esu)")
    p.add_argument("--standard", action="store_true",
                   help="use the surface-current convention (divides by 2 pi)")
    p.add_argument("--amp", type=float, default=1.0, help="axis field amplitude (G)")
    p.add_argument("--field-omega", type=float, default=1.0,
                   help="axis field angular rate (rad/s)")
    p.add_argument("--r", type=float, default=1.0, help="radius for the correction (cm)")
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--order", type=int, default=1, help="highest correction order k")
    p.add_argument("--particle", choices=("proton", "custom"), default="proton")
    p.add_argument("--mass", type=float)
    p.add_argument("--charge", type=float)
    p.add_argument("--r0", type=float, default=10.0, help="bore radius (cm)")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--output", help="output path (default stdout)")
    p.set_defaults(handler=cmd_solenoid)

    if defaults:
        # subcommands parse into their own namespace, so the defaults have
        # to reach every subparser, not just the root
        safe = {k: v for k, v in defaults.items()
                if k not in ("handler", "command")}
        for sp in (parser, *subparsers):
            sp.set_defaults(**safe)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # --config provides defaults; explicit flags still win because argparse
    # only falls back to defaults for absent flags.
    overrides = None
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            with open(argv[idx + 1]) as fh:
                overrides = json.load(fh)
        except (IndexError, OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read --config: {exc}", file=sys.stderr)
            return 2
        if not isinstance(overrides, dict):
            print("error: --config must hold a JSON object", file=sys.stderr)
            return 2
        overrides = {k.replace("-", "_"): v for k, v in overrides.items()}
    parser = build_parser(overrides)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except SingularityError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 4
    except (IntegrationError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
