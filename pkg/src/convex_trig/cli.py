"""Command-line front end.

Exit codes: 0 success, 2 malformed JSON, 3 invalid body, 4 body is not a
polygon, 5 separatrix endpoint reached without a dwell policy, 6 ``H`` out of
range.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from . import __version__
from . import geodesics as geo
from . import io
from . import oracle
from . import pendulum as pd
from . import trig
from .body import BodySpecError, InvalidBodyError, area, polar, validate
from .config import DEFAULT_TOL
from .polygon import build_tables

EXIT_JSON, EXIT_BODY, EXIT_NOT_POLYGON, EXIT_SEPARATRIX, EXIT_H = 2, 3, 4, 5, 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def parse_values(text: str) -> np.ndarray:
    """``a,b,c`` or ``start:stop:step`` (stop excluded)."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise CliError(EXIT_JSON, "range step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9))
        n = n + 1 if start + n * step < stop - 1e-12 * max(1.0, abs(stop)) else n
        return start + step * np.arange(max(n, 0))
    return np.array([float(v) for v in text.split(",") if v.strip()])


def _body(args):
    body = io.load_body(args.body)
    viol = validate(body, args.tol)
    if viol:
        raise InvalidBodyError(viol)
    return body


# -- subcommands -------------------------------------------------------------------------

def cmd_trig(args):
    body = _body(args)
    rows = []
    for th in parse_values(args.theta):
        x, y = trig.cos_sin(body, th)
        c = trig.correspondence(body, th)
        d = trig.derivative(body, th)
        rows.append((th, x, y, c.lo, c.hi, d.right[0], d.right[1]))
    io.write_csv(args.out, ["theta", "cos", "sin", "theta_polar_lo", "theta_polar_hi",
                            "dcos_right", "dsin_right"], rows)
    return body, {"theta": args.theta}, [args.out]


def cmd_polygon_tables(args):
    body = _body(args)
    if body.kind != "polygon":
        raise CliError(EXIT_NOT_POLYGON, f"polygon-tables needs a polygon body, got {body.kind}")
    tab = build_tables(body)
    io.write_csv(args.out, ["k", "x", "y", "Theta", "theta", "Qx", "Qy", "Theta_polar"], tab.rows())
    print(f"period {io.fmt(tab.period)}")
    print(f"polar_period {io.fmt(tab.polar_period)}")
    return body, {}, [args.out]


def cmd_polar(args):
    body = _body(args)
    spec = polar(body).to_spec()
    io.write_json(args.out, spec)
    return body, {}, [args.out]


def cmd_area(args):
    body = _body(args)
    a, ap = area(body), area(polar(body))
    print(f"area {io.fmt(a)}")
    print(f"period {io.fmt(2 * a)}")
    print(f"polar_area {io.fmt(ap)}")
    print(f"polar_period {io.fmt(2 * ap)}")
    return body, {}, []


def _levels(args, body):
    if args.levels:
        return parse_values(args.levels)
    lvl = pd.classify(body, 0.0)
    lo, hi = lvl.H_minus, lvl.H_plus
    return np.array([lo + 0.25 * (hi - lo), lo + 0.5 * (hi - lo), lo + 0.75 * (hi - lo),
                     hi, hi + 0.5 * (hi - lo)])


def cmd_pendulum(args):
    body = _body(args)
    policy = pd.parse_policy(args.policy)
    tol = args.tol.with_(ode_rtol=args.tol_ode) if args.tol_ode else args.tol
    try:
        tr = pd.simulate(body, pd.PendulumState(args.theta_polar, args.omega), args.T, policy,
                         n_samples=args.samples, tol=tol)
    except pd.SeparatrixPolicyError as exc:
        raise CliError(EXIT_SEPARATRIX, str(exc)) from None
    io.write_csv(args.out, ["t", "theta_polar", "omega", "u1", "u2", "energy", "event_flag"],
                 tr.rows())
    outs = [args.out]
    if args.portrait:
        curves = pd.phase_portrait(body, _levels(args, body), args.portrait_samples)
        with open(args.portrait, "w", encoding="utf-8") as fh:
            fh.write(io.portrait_svg(curves))
        outs.append(args.portrait)
    params = {"theta_polar": args.theta_polar, "omega": args.omega, "T": args.T,
              "policy": args.policy, "samples": args.samples}
    return body, params, outs


def cmd_portrait(args):
    body = _body(args)
    levels = _levels(args, body)
    curves = pd.phase_portrait(body, levels, args.samples)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(io.portrait_svg(curves))
    outs = [args.out]
    if args.csv:
        rows = []
        for c in curves:
            for x, wu, wl in zip(c.theta_polar, c.omega_upper, c.omega_lower):
                rows.append((c.H, c.regime, x, wu, wl))
        io.write_csv(args.csv, ["H", "regime", "theta_polar", "omega_upper", "omega_lower"], rows)
        outs.append(args.csv)
    for c in curves:
        print(f"H {io.fmt(c.H)} {c.regime}")
    return body, {"levels": levels.tolist(), "samples": args.samples}, outs


def _spec(args, body, system):
    data = io.load_json(args.spec) if args.spec else {}
    if not isinstance(data, dict):
        raise CliError(EXIT_JSON, "extremal spec must be a JSON object")
    data = dict(data)
    data["system"] = system
    for key in ("H", "q", "phi0", "theta_polar_0", "omega0"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    try:
        return geo.ExtremalSpec.from_dict(data, body)
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_JSON, f"bad extremal spec: {exc}") from None


def _verify_extremal(traj, spec, T, steps):
    names = geo.STATE_COORDS[spec.system]
    x0 = [traj.state[k][0] for k in names]
    Y = oracle.ode_reference(spec.system, traj.control_fn, T, steps, x0=x0,
                             breakpoints=traj.switch_times, sample_times=traj.t)
    S = np.column_stack([traj.state[k] for k in names])
    return float(np.max(np.abs(Y - S)))


def cmd_extremal(args):
    body = _body(args)
    spec = _spec(args, body, args.system)
    if spec.H < 0 or (spec.H == 0 and spec.system in ("heisenberg", "grushin")):
        raise CliError(EXIT_H, f"H must be positive, got {spec.H}")
    spec = geo.ExtremalSpec(**{**spec.__dict__, "policy": pd.parse_policy(args.policy)})
    try:
        res = geo.extremal(spec, args.T, args.n)
    except pd.SeparatrixPolicyError as exc:
        raise CliError(EXIT_SEPARATRIX, str(exc)) from None
    params = {"spec": spec.to_dict(), "T": args.T, "n": args.n, "policy": args.policy}
    if isinstance(res, geo.SingularReport):
        path = args.out + ".singular.json"
        io.write_json(path, res.to_dict())
        print(f"singular configuration: {res.reason}; report written to {path}")
        return body, params, [path]
    cols = res.columns()
    io.write_csv(args.out, [c[0] for c in cols], zip(*[c[1] for c in cols]))
    if spec.system == "heisenberg":
        tc = geo.heisenberg_conjugate_time(spec)
        print("conjugate_time " + ("none" if tc is None else io.fmt(tc)))
    if args.verify:
        err = _verify_extremal(res, spec, args.T, args.steps)
        print(f"oracle_sup_error {err:.3e}")
        params["oracle_sup_error"] = err
    return body, params, [args.out]


def cmd_verify(args):
    body = _body(args)
    if args.kind == "sector":
        rows = []
        worst = 0.0
        cfg = oracle.OracleConfig(boundary_samples=args.samples)
        per = trig.period(body)
        for th in parse_values(args.theta):
            P = trig.cos_sin(body, th)
            ref = oracle.sector_theta(body, P, cfg)
            red = th - per * math.floor(th / per)
            err = abs((ref - red + 0.5 * per) % per - 0.5 * per)
            worst = max(worst, err)
            rows.append((th, P[0], P[1], ref, err))
        if args.out:
            io.write_csv(args.out, ["theta", "x", "y", "sector_theta", "abs_error"], rows)
        print(f"sector_max_error {worst:.3e}")
        return body, {"kind": "sector", "theta": args.theta}, [args.out] if args.out else []
    spec = _spec(args, body, args.system)
    res = geo.extremal(spec, args.T, args.n)
    if isinstance(res, geo.SingularReport):
        print(f"singular configuration: {res.reason}")
        return body, {"kind": "ode"}, []
    err = _verify_extremal(res, spec, args.T, args.steps)
    print(f"oracle_sup_error {err:.3e}")
    return body, {"kind": "ode", "spec": spec.to_dict(), "error": err}, []


def cmd_replay(args):
    data = io.load_json(args.manifest)
    argv = data.get("argv")
    if not isinstance(argv, list):
        raise CliError(EXIT_JSON, "manifest lacks an argv list")
    return main(argv)


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convex-trig",
                                description="Trigonometry of convex bodies and sub-Finsler extremals.")
    p.add_argument("--tol-geo", type=float, default=DEFAULT_TOL.geo, help="geometric tolerance")
    p.add_argument("--tol-ode", type=float, default=None, help="relative tolerance of adaptive runs")
    p.add_argument("--seed", type=int, default=0, help="seed recorded in the manifest")
    p.add_argument("--manifest-dir", default=None, help="directory for run manifests")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("trig", help="table of cos, sin, correspondence and derivative")
    s.add_argument("body")
    s.add_argument("--theta", required=True, help="a,b,c or start:stop:step")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_trig)

    s = sub.add_parser("polygon-tables", help="vertex and polar tables of a polygon")
    s.add_argument("body")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_polygon_tables)

    s = sub.add_parser("polar", help="write the polar body as JSON")
    s.add_argument("body")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_polar)

    s = sub.add_parser("area", help="print areas and periods")
    s.add_argument("body")
    s.set_defaults(func=cmd_area)

    s = sub.add_parser("pendulum", help="simulate the generalized pendulum")
    s.add_argument("body")
    s.add_argument("--theta-polar", type=float, required=True)
    s.add_argument("--omega", type=float, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--policy", default=None, help="stay | dwell:DT[:DIR] | exit[:DIR]")
    s.add_argument("--samples", type=int, default=1001)
    s.add_argument("--out", required=True)
    s.add_argument("--portrait", default=None, help="also write a phase-portrait SVG")
    s.add_argument("--levels", default=None, help="energy levels for the portrait")
    s.add_argument("--portrait-samples", type=int, default=400)
    s.set_defaults(func=cmd_pendulum)

    s = sub.add_parser("portrait", help="phase portrait SVG (and optional CSV)")
    s.add_argument("body")
    s.add_argument("--levels", default=None)
    s.add_argument("--samples", type=int, default=400)
    s.add_argument("--out", required=True)
    s.add_argument("--csv", default=None)
    s.set_defaults(func=cmd_portrait)

    def extremal_args(s):
        s.add_argument("system", choices=geo.SYSTEMS)
        s.add_argument("body")
        s.add_argument("--spec", default=None, help="JSON file with H, q, phi0, theta_polar_0, omega0, x0")
        for key in ("H", "q", "phi0", "theta_polar_0", "omega0"):
            s.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=None)
        s.add_argument("--T", type=float, required=True)
        s.add_argument("--n", type=int, default=1001)
        s.add_argument("--steps", type=int, default=100_000, help="oracle RK4 steps")

    s = sub.add_parser("extremal", help="extremal trajectory CSV")
    extremal_args(s)
    s.add_argument("--policy", default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--verify", action="store_true", help="compare with the RK4 oracle")
    s.set_defaults(func=cmd_extremal)

    s = sub.add_parser("verify", help="run an oracle")
    vs = s.add_subparsers(dest="kind", required=True)
    v = vs.add_parser("sector", help="sector-area oracle against cos_sin")
    v.add_argument("body")
    v.add_argument("--theta", required=True)
    v.add_argument("--samples", type=int, default=oracle.DEFAULT_ORACLE.boundary_samples)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)
    v = vs.add_parser("ode", help="RK4 oracle against an extremal")
    extremal_args(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    s.add_argument("manifest")
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.tol = DEFAULT_TOL.with_(geo=args.tol_geo)
    start = time.perf_counter()
    try:
        if args.command == "replay":
            return args.func(args)
        body, params, outs = args.func(args)
    except BodySpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_JSON
    except InvalidBodyError as exc:
        print("error: invalid convex body", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_BODY
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    duration = time.perf_counter() - start
    for out in outs:
        io.write_manifest(io.manifest_path(out, args.manifest_dir), command=args.command,
                          argv=argv, body=body.to_spec() if body is not None else None,
                          params={**params, "seed": args.seed}, tol=args.tol, outputs=outs,
                          version=__version__, duration=duration)
    return 0


if __name__ == "__main__":
    sys.exit(main())
