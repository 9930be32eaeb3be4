"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import run_verification
from .density import StateError
from .qchannel import ChannelError
from .qmeasure import correlation_report
from .qstate import bell_phi_plus, rho_D, rho_DD, sigma_R, sigma_RR
from .sweep import FIGURES, SweepConfig, run_sweep, sweep_csv, write_figure
from .wmrwm import Scenario, Variant

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

STATE_SPECS = {
    "bell": (0, lambda: (bell_phi_plus(), 1.0)),
    "rho_d": (1, lambda d: (rho_D(d), 1.0)),
    "rho_dd": (1, lambda d: (rho_DD(d, d), 1.0)),
    "sigma_r": (3, lambda d, p, q: tuple(sigma_R(d, p, q).__dict__.values())),
    "sigma_rr": (3, lambda d, p, q: tuple(sigma_RR(d, p, q).__dict__.values())),
}


def parse_state_spec(spec: str):
    """``name`` or ``name:v1,v2,...`` -> (DensityMatrix, success probability)."""
    name, _, args = spec.partition(":")
    if name not in STATE_SPECS:
        raise ValueError(f"unknown state {name!r}; choose from {', '.join(STATE_SPECS)}")
    arity, build = STATE_SPECS[name]
    values = [float(x) for x in args.split(",")] if args else []
    if len(values) != arity:
        raise ValueError(f"{name} takes {arity} parameter(s), got {len(values)}")
    return build(*values)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="teleprotect",
        description="Entanglement, teleportation fidelity and classical correlation "
        "under amplitude damping with weak-measurement protection.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("measure", help="report all quantifiers for one state")
    m.add_argument("state", help="bell | rho_d:D | rho_dd:D | sigma_r:D,p,q | sigma_rr:D,p,q")
    m.add_argument("--json", metavar="PATH", help="also write the report as JSON")

    s = sub.add_parser("sweep", help="sweep the damping strength and write CSV")
    s.add_argument("--scenario", type=int, choices=(1, 2), required=True)
    s.add_argument("--wmrwm", action="store_true", help="apply weak measurement protection")
    s.add_argument("--p", type=float, default=0.1, help="weak measurement strength")
    s.add_argument("--variant", choices=("tf", "c", "both"), default="both")
    s.add_argument("--steps", type=int, default=201)
    s.add_argument("--d-start", type=float, default=0.0)
    s.add_argument("--d-end", type=float, default=1.0)
    s.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    v = sub.add_parser("verify", help="run the self-checks and the claims audit")
    v.add_argument("--json", metavar="PATH", help="write the JSON summary here")
    v.add_argument("--quiet", action="store_true")

    f = sub.add_parser("figure", help="write curve CSVs and a gnuplot script for a figure")
    f.add_argument("figure", type=int, choices=sorted(FIGURES))
    f.add_argument("--out", required=True, metavar="DIR")
    f.add_argument("--steps", type=int, default=201)
    return ap


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_measure(args, ap) -> int:
    try:
        state, prob = parse_state_spec(args.state)
    except (ValueError, StateError, ChannelError) as exc:
        ap.error(f"bad state spec {args.state!r}: {exc}")
    rep = correlation_report(state).as_dict()
    rep["success_prob"] = prob
    for k, val in rep.items():
        print(f"{k} = {val:.12g}")
    if args.json:
        _write(args.json, json.dumps({"state": args.state, **rep}, indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(args, ap) -> int:
    if args.wmrwm:
        scenario = Scenario.I_WMRWM if args.scenario == 1 else Scenario.II_WMRWM
        variants = {"tf": (Variant.TF_MAX,), "c": (Variant.C_MAX,),
                    "both": (Variant.TF_MAX, Variant.C_MAX)}[args.variant]
        p = args.p
    else:
        scenario = Scenario.I_BARE if args.scenario == 1 else Scenario.II_BARE
        variants, p = (Variant.NONE,), 0.0
    try:
        cfg = SweepConfig(scenario, args.d_start, args.d_end, args.steps, p, variants,
                          output_path=args.out)
    except ValueError as exc:
        ap.error(str(exc))
    _write(cfg.output_path, sweep_csv(run_sweep(cfg)))
    return EXIT_OK


def cmd_verify(args, ap) -> int:
    log = None if args.quiet else (lambda line: print(line, flush=True))
    report = run_verification(log)
    summary = report.as_dict()
    if not args.quiet:
        for rec in summary["discrepancies"]:
            print(f"[DISCREPANCY] {rec['claim_id']} ({rec['severity']}): "
                  f"paper {rec['paper_value']!r} vs computed {rec['computed_value']:.6g}")
        for cid in report.unexpected:
            print(f"[FAIL] unexpected discrepancy {cid}")
        for cid in report.missing:
            print(f"[FAIL] allowlisted discrepancy {cid} not detected")
    if args.json:
        _write(args.json, json.dumps(summary, indent=2) + "\n")
    print("verify: " + ("PASS" if report.passed else "FAIL"))
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_figure(args, ap) -> int:
    for path in write_figure(args.figure, args.out, steps=args.steps):
        print(path)
    return EXIT_OK


COMMANDS = {"measure": cmd_measure, "sweep": cmd_sweep, "verify": cmd_verify, "figure": cmd_figure}


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return COMMANDS[args.command](args, ap)
    except OSError as exc:
        print(f"teleprotect: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
