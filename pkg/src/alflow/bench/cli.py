"""Command line entry point: ``python -m alflow solve --case ... --config FILE``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .cases import case_defaults, run_case
from .config import CASES, read_config
from .report import write_fields, write_report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="alflow", description="Augmented Lagrangian non-Newtonian flow solver")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run a benchmark sweep")
    s.add_argument("--case", required=True, choices=CASES)
    s.add_argument("--config", type=Path, help="key = value run configuration")
    s.add_argument("--k", type=int)
    s.add_argument("--refs", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--sweep", help="NAME=v1,v2,...")
    s.add_argument("--out", type=Path)
    s.add_argument("--dump-blocks", action="store_true", help="write Jacobian blocks as MatrixMarket files")
    s.add_argument("--jacobi-relax", action="store_true", help="point-Jacobi instead of macrostar relaxation")
    s.add_argument("--fd-check", action="store_true", help="finite-difference check of every Jacobian")
    s.add_argument("-q", "--quiet", action="store_true")
    return ap


def config_from_args(args):
    cfg = case_defaults(args.case)
    if args.config is not None:
        cfg = read_config(args.config, base=cfg)
        if cfg.case != args.case:
            raise ValueError(f"config file is for case {cfg.case!r}, not {args.case!r}")
    changes = {}
    if args.k is not None:
        changes["k"] = args.k
    if args.refs is not None:
        changes["refs"] = args.refs
    if args.gamma is not None:
        changes["gamma"] = args.gamma
    if args.sweep:
        name, _, vals = args.sweep.partition("=")
        if not vals:
            raise ValueError("--sweep expects NAME=v1,v2,...")
        changes["sweep_param"] = name.strip()
        changes["sweep_values"] = [float(v) for v in vals.split(",") if v.strip()]
    if args.out is not None:
        changes["out_dir"] = str(args.out)
    if args.dump_blocks:
        changes["dump_blocks"] = True
    if args.jacobi_relax:
        changes["relaxation"] = "jacobi"
    if args.fd_check:
        changes["fd_check"] = True
    return cfg.replace(**changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_case(cfg, dump_dir=out / "blocks")
    write_report(report, out / f"{cfg.case}.csv")
    if report.state is not None:
        write_fields(report.solver, report.state, out / f"{cfg.case}.vtk")
    if "power_law_state" in report.extras:
        write_fields(report.solver, report.extras["power_law_state"], out / f"{cfg.case}_power_law.vtk")
    for p in report.points:
        print(f"{cfg.sweep_param}={p.param:g}: newton {p.newton_its}, krylov avg {p.krylov_avg:.2f}, "
              f"div {p.div_L2:.2e}, {'ok' if p.converged else 'FAILED'}")
    return 0 if report.all_converged and len(report.points) == len(cfg.sweep_values) else 1
