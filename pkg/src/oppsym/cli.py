"""Command-line entry point ``opp-symmetry``.

Exit codes: 0 success, 1 input error, 2 budget exhausted (partial output,
``complete`` false), 3 internal consistency failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .graph import GraphFormatError, read_input
from .report import (
    comparison_dict,
    comparison_lines,
    plot_conflict_histogram,
    stats_dict,
    stats_lines,
)
from .search import DEFAULT_MAX_NODES, Heuristic, TheoremViolation, run_comparison, search

EXIT_OK, EXIT_PARSE, EXIT_BUDGET, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass
class RunConfig:
    path: str | None
    cnf: bool
    mode: str
    heuristic: str
    max_nodes: int
    timeout_ms: float | None
    json: bool
    trace: bool
    plot: str | None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="opp-symmetry",
        description="Find generators of a colored graph's automorphism group.",
    )
    ap.add_argument("input", nargs="?", default=None, help="input file (default: stdin)")
    ap.add_argument("--mode", choices=["enhanced", "baseline", "compare"], default="enhanced")
    ap.add_argument("--heuristic", choices=[h.value for h in Heuristic], default="first")
    ap.add_argument("--cnf", action="store_true", help="input is DIMACS CNF")
    ap.add_argument("--json", action="store_true", help="emit one JSON object")
    ap.add_argument("--trace", action="store_true", help="log refinement events to stderr")
    ap.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    ap.add_argument("--timeout-ms", type=float, default=None)
    ap.add_argument("--plot", metavar="PATH", default=None,
                    help="compare mode: write the conflict-depth histogram figure to PATH")
    return ap


def parse_config(argv) -> RunConfig:
    ap = build_parser()
    a = ap.parse_args(argv)
    if a.plot and a.mode != "compare":
        ap.error("--plot requires --mode=compare")
    return RunConfig(a.input, a.cnf, a.mode, a.heuristic, a.max_nodes, a.timeout_ms,
                     a.json, a.trace, a.plot)


def main(argv=None) -> int:
    cfg = parse_config(sys.argv[1:] if argv is None else argv)
    try:
        g = read_input(cfg.path, cfg.cnf)
    except (GraphFormatError, ValueError, OSError) as exc:
        print(f"opp-symmetry: {exc}", file=sys.stderr)
        return EXIT_PARSE

    log = (lambda s: print(s, file=sys.stderr)) if cfg.trace else None
    budget = dict(max_nodes=cfg.max_nodes, timeout_ms=cfg.timeout_ms)
    try:
        if cfg.mode == "compare":
            rep = run_comparison(g, cfg.heuristic, **budget)
            out = comparison_dict(g, rep) if cfg.json else comparison_lines(g, rep)
            complete = rep.comparable
            if cfg.plot:
                plot_conflict_histogram(rep, cfg.plot)
            if complete and not rep.orders_equal:
                print("opp-symmetry: modes disagree on group order", file=sys.stderr)
                _emit(out, cfg.json)
                return EXIT_INTERNAL
        else:
            _, st = search(g, cfg.mode, cfg.heuristic, log=log, **budget)
            out = stats_dict(g, st) if cfg.json else stats_lines(g, st)
            complete = st.complete
    except TheoremViolation as exc:
        print(f"opp-symmetry: internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    _emit(out, cfg.json)
    if not complete:
        print("opp-symmetry: budget exhausted, results are partial", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _emit(out, as_json: bool) -> None:
    if as_json:
        print(json.dumps(out, sort_keys=True))
    else:
        print("\n".join(out))


if __name__ == "__main__":
    sys.exit(main())
