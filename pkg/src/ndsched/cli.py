"""Command-line entry point: ``ndsched <synth|eval|mdtopt|simulate|campaign>``.

Exit codes: 0 success, 2 invalid input or configuration, 3 size cap exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from fractions import Fraction
from pathlib import Path

from . import campaign as cp
from ._errors import HorizonExceededError
from .families import SamplingError, parse_family
from .mdtopt import DEFAULT_HORIZON_CAP, DEFAULT_NODE_LIMIT, BudgetExceededError, TooLargeError, build_ilp, solve_exact
from .model import BpSet, ConfigProbabilityMap, IncompleteScheduleError, ListeningSchedule, compute_metrics
from .rng import DrawStream, derive_seed
from .schedulers import STRATEGIES, TiebreakerRule, UnsupportedInputError, build, greedy
from .sim import PhyParams, generate_neighbors, run_trial

EXIT_OK, EXIT_INVALID, EXIT_TOO_LARGE = 0, 2, 3


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bp", required=True, help="beacon periods, e.g. 1,2,4")
    p.add_argument("--channels", "-c", type=int, required=True, help="number of channels")
    p.add_argument("--probs", help="probability file with lines c,b,delta,num/den (default uniform)")


def _load_scenario(args):
    B = BpSet.parse(args.bp)
    P = ConfigProbabilityMap.from_text(Path(args.probs).read_text()) if getattr(args, "probs", None) else None
    return B, args.channels, P


def _write(text: str, out) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_synth(args) -> int:
    B, C, P = _load_scenario(args)
    if args.strategy == "greedy":
        L = greedy(B, C, P, TiebreakerRule.parse(args.rule, args.seed), args.backend)
        label = f"greedy {args.rule}"
    else:
        L = build(args.strategy, B, C, P, seed=args.seed, backend=args.backend)
        label = args.strategy
    _write(L.to_text(f"{label} B={B} channels={C}"), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    B, C, P = _load_scenario(args)
    L = ListeningSchedule.from_text(Path(args.schedule).read_text())
    ref = Fraction(args.mdt_ref) if args.mdt_ref else None
    m = compute_metrics(L, B, C, P, ref)
    lines = [
        f"wdt_slots={m.wdt_slots}",
        f"mdt={m.mdt}",
        f"listening_slots={m.listening_slots}",
        f"channel_switches={m.channel_switches}",
        f"normalized_wdt={m.normalized_wdt}",
        f"normalized_listening={m.normalized_listening}",
        f"normalized_switches={m.normalized_switches}",
    ]
    if m.normalized_mdt is not None:
        lines.append(f"normalized_mdt={m.normalized_mdt}")
    if args.ndot:
        lines.extend(f"ndot={x},{p}" for x, p in m.ndot_cdf)
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_mdtopt(args) -> int:
    B, C, P = _load_scenario(args)
    model = build_ilp(B, C, P, horizon_cap=args.horizon_cap)
    if args.emit_lp:
        Path(args.emit_lp).write_text(model.to_lp_text(), encoding="utf-8")
    sol = solve_exact(model, args.node_limit, args.backend)
    _write(sol.schedule.to_text(f"mdtopt B={B} channels={C} mdt={sol.mdt}"), args.out)
    print(f"mdt={sol.mdt}", file=sys.stderr if not args.out or args.out == "-" else sys.stdout)
    return EXIT_OK


def cmd_simulate(args) -> int:
    B, C, _ = _load_scenario(args)
    phy = PhyParams(args.slot_symbols, args.beacon_symbols, args.switch_symbols)
    rows = []
    for r in range(args.runs):
        seed = derive_seed(args.seed, r)
        if args.schedule:
            L, strategy = ListeningSchedule.from_text(Path(args.schedule).read_text()), "file"
        else:
            L, strategy = build(args.strategy, B, C, seed=seed, backend=args.backend), args.strategy
        nbs = generate_neighbors(B, C, args.neighbors, DrawStream(seed, (C, args.neighbors)), phy)
        out = run_trial(L, nbs, phy, initial_deaf=not args.no_initial_deaf, B=B, n_channels=C, backend=args.backend)
        rows.append({"family": args.family, "strategy": strategy, "seed": seed, "num_channels": C,
                     "num_neighbors": args.neighbors, "discovered": out.discovered, "total": out.total,
                     "success_rate": out.success_rate})
    _write(cp.csv_text(cp.SIM_COLUMNS, rows), args.out)
    return EXIT_OK


def cmd_campaign(args) -> int:
    if args.config:
        cfg = cp.parse_config(Path(args.config).read_text())
    else:
        cfg = cp.CampaignConfig()
    overrides = {}
    if args.kind:
        overrides["kind"] = args.kind
    if args.families:
        overrides["families"] = [parse_family(f) for f in args.families.split(",")]
    if args.channels:
        overrides["channel_range"] = cp._ints(args.channels)
    if args.neighbors:
        overrides["neighbor_range"] = cp._ints(args.neighbors)
    if args.samples is not None:
        overrides["samples"] = args.samples
    if args.runs is not None:
        overrides["runs_per_point"] = args.runs
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.scale is not None:
        overrides["scale"] = args.scale
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.no_mdtopt:
        overrides["mdtopt_enabled"] = False
    if args.preset:
        overrides["preset"] = args.preset
    if args.backend:
        overrides["backend"] = args.backend
    if args.no_initial_deaf:
        overrides["initial_deaf"] = False
    if overrides:
        base = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
        base.update(overrides)
        cfg = cp.CampaignConfig(**base)
    paths = cp.run_campaign(cfg, args.out, plots=not args.no_plots)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ndsched", description="Multi-channel passive neighbor discovery schedules.")
    ap.add_argument("--backend", choices=["auto", "cython", "python"], default=None,
                    help="kernel implementation (default: compiled if available)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="construct a listening schedule")
    _scenario_args(p)
    p.add_argument("--strategy", default="greedy", choices=["greedy"] + list(STRATEGIES))
    p.add_argument("--rule", default="dtr", choices=["rnd", "dtr", "rnd-swt", "dtr-swt"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="ideal-model metrics of a schedule file")
    _scenario_args(p)
    p.add_argument("--schedule", "-s", required=True)
    p.add_argument("--mdt-ref", help="reference MDT (fraction) for normalization")
    p.add_argument("--ndot", action="store_true", help="also print the NDoT step points")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mdtopt", help="exact MDT-optimal schedule")
    _scenario_args(p)
    p.add_argument("--emit-lp", metavar="PATH", help="write the integer program in LP format")
    p.add_argument("--horizon-cap", type=int, default=DEFAULT_HORIZON_CAP)
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_mdtopt)

    p = sub.add_parser("simulate", help="realistic trials of one strategy")
    _scenario_args(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strategy", default="greedy-dtr-swt", choices=list(STRATEGIES))
    g.add_argument("--schedule", help="schedule file instead of a strategy")
    p.add_argument("--neighbors", "-n", type=int, default=15)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", default="-", help="label for the family column")
    p.add_argument("--slot-symbols", type=int, default=960)
    p.add_argument("--beacon-symbols", type=int, default=38)
    p.add_argument("--switch-symbols", type=int, default=24)
    p.add_argument("--no-initial-deaf", action="store_true", help="no deaf period before the first scanned slot")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("campaign", help="run a numeric or simulation campaign")
    p.add_argument("--config", help="key=value campaign file")
    p.add_argument("--kind", choices=["numeric", "simulation"], default=None)
    p.add_argument("--families", help="e.g. F1,F2")
    p.add_argument("--channels", help="channel counts, e.g. 2,4,8 or 2-8")
    p.add_argument("--neighbors", help="neighbor counts for the simulation sweep")
    p.add_argument("--samples", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--scale", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--preset", choices=["numeric", "simulation"])
    p.add_argument("--no-mdtopt", action="store_true")
    p.add_argument("--no-initial-deaf", action="store_true")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--out", "-o", default="campaign_out")
    p.set_defaults(func=cmd_campaign)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (TooLargeError, HorizonExceededError, BudgetExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (ValueError, UnsupportedInputError, IncompleteScheduleError, SamplingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
