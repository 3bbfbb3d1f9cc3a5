"""Command-line entry point.

Exit codes: 0 success, 1 failed certificate under ``--strict``, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .anisotropy import Anisotropy, parse_anisotropy, wulff_shape
from .config import load_config
from .curve2d import MultiCurve, circle, load_curve, save_curve
from .errors import AllComponentsVanished, AnisoshapeError
from .potential import parse_potential
from .report import diagnose, write_svg
from .solve import SolveConfig, atw_step, minimize_constrained, minimize_multistart, minimize_unconstrained
from .twopoint import save_field_csv, two_point
from .variation import spectrum

def _problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config; --aniso/--potential/--mode override it")
    p.add_argument("--aniso", help="anisotropy, e.g. iso or elliptic:2,1")
    p.add_argument("--epsilon", type=float, default=1e-2, help="regularisation of the lq family")
    p.add_argument("--potential", help="potential, e.g. quadratic:1e-2,0,0")
    p.add_argument("--mode", choices=("constrained", "unconstrained"))


def _problem(args, curve: MultiCurve | None = None):
    aniso, g, mode = Anisotropy("iso"), None, "constrained"
    if args.config:
        rc = load_config(args.config)
        aniso, g, mode = rc.aniso, rc.potential, rc.mode
    if args.aniso:
        aniso = parse_anisotropy(args.aniso, args.epsilon)
    if args.potential:
        g = parse_potential(args.potential, base=curve)
    if args.mode:
        mode = args.mode
    if g is None:
        raise AnisoshapeError("no potential given (use --potential or --config)")
    return aniso, g, mode


def _write_json(path, data) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(data, indent=2))


def cmd_wulff(args) -> int:
    spec = f"{args.family}:{args.params}" if args.params else args.family
    aniso = parse_anisotropy(spec, args.epsilon)
    save_curve(wulff_shape(aniso, args.n, args.scale), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_two_point(args) -> int:
    curve = load_curve(args.curve)
    aniso = parse_anisotropy(args.aniso, args.epsilon) if args.aniso else None
    fld = two_point(curve, aniso, accelerate=args.accelerate)
    save_field_csv(curve, fld, args.out)
    print(json.dumps({"S_max": float(fld.S.max()), "nondegenerate": int(fld.nondegenerate.sum()), "out": args.out}))
    return 0


def cmd_spectrum(args) -> int:
    curve = load_curve(args.curve)
    aniso, g, mode = _problem(args, curve)
    which = args.which or ("mean_zero" if mode == "constrained" else "free")
    sp = spectrum(curve, aniso, g, which, k=args.k)
    out = {"mode": which, "values": [float(v) for v in sp.values], "max_residual": sp.max_residual,
           "h": curve.h}
    if args.out:
        _write_json(args.out, out)
    print(json.dumps(out))
    return 0


def _finish_certificate(cert, args) -> int:
    if getattr(args, "out", None):
        cert.save(args.out)
    if getattr(args, "svg", None):
        write_svg(args.curve_obj, args.svg)
    summary = {"verdict": cert.verdict, "classification": cert.classification,
               "checks": {c.name: c.passed for c in cert.checks}}
    print(json.dumps(summary))
    return 1 if args.strict and not cert.verdict else 0


def cmd_diagnose(args) -> int:
    curve = load_curve(args.curve)
    aniso, g, mode = _problem(args, curve)
    cert = diagnose(curve, aniso, g, mode)
    args.curve_obj = curve
    return _finish_certificate(cert, args)


def cmd_minimize(args) -> int:
    if not args.config:
        raise AnisoshapeError("minimize needs --config")
    rc = load_config(args.config)
    cfg = replace(rc.solve, seed=args.seed if args.seed is not None else rc.solve.seed)
    if args.log_every is not None:
        cfg = replace(cfg, log_every=args.log_every)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if rc.mode == "constrained":
        res = minimize_constrained(rc.init, rc.aniso, rc.potential, cfg) if rc.init is not None and cfg.n_starts <= 1 \
            else minimize_multistart(rc.aniso, rc.potential, cfg, rc.init)
    else:
        init = rc.init if rc.init is not None else MultiCurve((circle(1.0, cfg.n_vertices),))
        try:
            res = minimize_unconstrained(init, rc.aniso, rc.potential, cfg)
        except AllComponentsVanished as exc:
            _write_json(out / "result.json", {"termination": exc.result.termination,
                                              "iterations": exc.result.iterations,
                                              "energy_history": exc.result.energy_history})
            print(json.dumps({"termination": "all_components_vanished"}))
            return 0
    save_curve(res.curve, out / "curve.json")
    _write_json(out / "result.json", {
        "termination": res.termination,
        "iterations": res.iterations,
        "energy": res.energy,
        "energy_history": res.energy_history,
        "residual_history": res.residual_history,
        "starts": res.starts,
        "report": res.report.to_json() if res.report else None,
    })
    with (out / "events.jsonl").open("w") as fh:
        for ev in res.events:
            fh.write(json.dumps(ev) + "\n")
    if res.trajectory:
        tdir = out / "trajectory"
        tdir.mkdir(exist_ok=True)
        for k, c in enumerate(res.trajectory):
            save_curve(c, tdir / f"iterate_{k:05d}.json")
    cert = diagnose(res.curve, rc.aniso, rc.potential, rc.mode)
    cert.save(out / "certificate.json")
    write_svg(res.curve, out / "curve.svg")
    print(json.dumps({"termination": res.termination, "iterations": res.iterations, "energy": res.energy,
                      "verdict": cert.verdict, "classification": cert.classification}))
    return 1 if args.strict and not cert.verdict else 0


def cmd_atw(args) -> int:
    curve = load_curve(args.curve)
    aniso = parse_anisotropy(args.aniso, args.epsilon)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SolveConfig(n_vertices=curve.n_vertices, tol=args.tol, max_iter=args.max_iter, dt=1.0, remesh_every=0)
    save_curve(curve, out / "step_0000.json")
    for k in range(1, args.steps + 1):
        try:
            curve = atw_step(curve, aniso, args.tau, cfg)
        except AllComponentsVanished:
            print(json.dumps({"steps": k - 1, "termination": "all_components_vanished"}))
            return 0
        save_curve(curve, out / f"step_{k:04d}.json")
    print(json.dumps({"steps": args.steps, "termination": "completed", "out_dir": str(out)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anisoshape", description="Anisotropic shape minimisation and diagnostics")
    ap.add_argument("--seed", type=int, default=None, help="seed for every random choice")
    ap.add_argument("--strict", action="store_true", help="exit 1 when a certificate fails")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--strict", action="store_true", default=argparse.SUPPRESS)

    p = sub.add_parser(parents=[common], name="minimize", help="run the descent solver from a config file")
    p.add_argument("--config", required=False)
    p.add_argument("--out-dir", default="run")
    p.add_argument("--log-every", type=int, default=None)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser(parents=[common], name="diagnose", help="certificate for a curve")
    p.add_argument("--curve", required=True)
    _problem_args(p)
    p.add_argument("--out", help="certificate JSON path")
    p.add_argument("--svg", help="optional SVG rendering")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser(parents=[common], name="two-point", help="two-point function field as CSV")
    p.add_argument("--curve", required=True)
    p.add_argument("--aniso", help="also compute the Jacobi operator applied to S")
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--accelerate", action="store_true", help="scan convex-hull vertices only")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_two_point)

    p = sub.add_parser(parents=[common], name="spectrum", help="lowest stability eigenvalues")
    p.add_argument("--curve", required=True)
    _problem_args(p)
    p.add_argument("--which", choices=("free", "mean_zero"))
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser(parents=[common], name="wulff", help="Wulff shape polygon")
    p.add_argument("--family", required=True)
    p.add_argument("--params", default="")
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wulff)

    p = sub.add_parser(parents=[common], name="atw", help="minimising-movements trajectory")
    p.add_argument("--curve", required=True)
    p.add_argument("--aniso", default="iso")
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--out-dir", default="atw")
    p.set_defaults(func=cmd_atw)
    return ap


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.seed is not None:
        np.random.seed(args.seed)
    args.strict = getattr(args, "strict", False)
    try:
        return args.func(args)
    except (AnisoshapeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
