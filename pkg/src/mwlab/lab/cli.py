"""Command line entry point (``mwlab``).

Exit codes: 0 when everything passes, 1 on a property violation or an
unstable fitted constant, 2 on a configuration error.
"""

import argparse
import sys

import numpy as np

from .. import bmo, norms
from ..dyadic import Grid, cube_family
from ..operators import czo_map
from ..weights import ap_characteristic
from .config import ConfigError, ExperimentConfig, load_config
from .report import fmt, read_report, write_report
from .suites import SUITES, instance_seed, make_symbol, make_weights, run_all, run_suite, kinds


def _depths(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"depth must be an integer or comma list, got {text!r}")


def _common():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (every key optional)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--depth", type=_depths, help="depth L, or a comma list of depths")
    common.add_argument("--out", help="output directory for reports")
    return common


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="mwlab", description="Two-weight matrix BMO laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ap", parents=[common], help="A_p characteristics of the configured U and V")
    sub.add_parser("bmo", parents=[common], help="BMO quantities a)-e) of the configured symbol")
    sub.add_parser("opnorm", parents=[common], help="weighted norm of the Hilbert/Riesz transforms")
    sub.add_parser("commutator", parents=[common], help="weighted norm of [M_B, T]")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=sorted(SUITES) + ["all"])
    r = sub.add_parser("report", parents=[common], help="summarize a written report")
    r.add_argument("path", nargs="?", help="report.json (default: <out>/report.json)")
    return parser


def resolve_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.depth:
        changes["depths"] = args.depth
    if args.out:
        changes["out"] = args.out
    return cfg.with_(**changes) if changes else cfg


def _instance(cfg):
    L = cfg.depths[0]
    grid = Grid(cfg.d, L)
    seed = instance_seed(cfg, 0)
    U, V = make_weights(cfg, grid, seed)
    return grid, seed, U, V


def cmd_ap(cfg):
    grid, _, U, V = _instance(cfg)
    cubes = cube_family(grid)
    for name, w in (("U", U), ("V", V)):
        a = ap_characteristic(w, cfg.p, cubes)
        print(f"[{name}]_A_p = {fmt(a)}")
    return 0


def cmd_bmo(cfg):
    grid, seed, U, V = _instance(cfg)
    B = make_symbol(cfg, grid, seed)
    rep = bmo.jn_quantities(B, U, V, cfg.p, cube_family(grid))
    for k, v in rep.as_dict().items():
        print(f"{k} = {fmt(v)}")
    print(f"a^(1/p) = {fmt(rep.a ** (1 / cfg.p))}")
    return 0


def cmd_opnorm(cfg):
    grid, seed, U, V = _instance(cfg)
    for kind in kinds(cfg.d):
        T = czo_map(grid, kind, cfg.m)
        est = norms.operator_norm(T, U, V, cfg.p, cfg.restarts, seed)
        print(f"||{kind}|| = {fmt(est.value)} ({est.mode})")
    return 0


def cmd_commutator(cfg):
    grid, seed, U, V = _instance(cfg)
    B = make_symbol(cfg, grid, seed)
    for kind in kinds(cfg.d):
        est = norms.commutator_norm(B, kind, U, V, cfg.p, cfg.restarts, seed)
        print(f"||[M_B, {kind}]|| = {fmt(est.value)} ({est.mode})")
    return 0


def _summary(reports):
    code = 0
    for rep in reports:
        worst = [k for k, v in rep.drift.items() if not np.isfinite(v) or v >= 2]
        fails = sorted({r.check for r in rep.rows if r.status == "fail"})
        extra = ""
        if fails:
            extra = " failed: " + ", ".join(fails)
        elif worst:
            extra = " unstable: " + ", ".join(worst)
        print(f"{rep.suite}: {rep.verdict}{extra}")
        if rep.verdict != "PASS":
            code = 1
    return code


def cmd_verify(cfg, suite):
    reports = run_all(cfg) if suite == "all" else [run_suite(cfg, suite)]
    csv_path, _ = write_report(reports, cfg.out, cfg)
    code = _summary(reports)
    print(f"report written to {csv_path}")
    return code


def cmd_report(cfg, path):
    import os

    path = path or os.path.join(cfg.out, "report.json")
    if not os.path.exists(path):
        raise ConfigError(f"report not found: {path}")
    return _summary(read_report(path))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        if args.command == "report":
            return cmd_report(cfg, args.path)
        return {"ap": cmd_ap, "bmo": cmd_bmo, "opnorm": cmd_opnorm,
                "commutator": cmd_commutator}[args.command](cfg)
    except ConfigError as exc:
        print(f"mwlab: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
