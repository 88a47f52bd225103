"""Command-line front end: ``ic3ia FILE [options]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

from .checkers import bmc, kind
from .engine import EngineConfig, IC3IA, Verdict
from .smtlib import SmtLibError
from .solver import DEFAULT_COMMAND, SolverConfig, SolverContext, SolverError, UnknownResult
from .system import format_definition, parse_state_formula, parse_vmt
from .cegar import REFINE_MODES

EXIT_OK, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2


def _modes(text: str) -> tuple[str, ...]:
    modes = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in modes if m not in REFINE_MODES]
    if not modes or bad:
        raise argparse.ArgumentTypeError(
            f"expected a comma list of {', '.join(REFINE_MODES)}; got {text!r}")
    return modes


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ic3ia",
        description="Safety model checking of VMT transition systems with IC3 "
                    "over implicit predicate abstraction.")
    p.add_argument("input", help="VMT file")
    p.add_argument("--engine", choices=("ic3ia", "bmc", "kind"), default="ic3ia")
    p.add_argument("--property", type=_nonneg, default=0, metavar="N",
                   help="index of the :invar-property to check (default 0)")
    p.add_argument("--depth", type=_nonneg, metavar="K",
                   help="depth bound, required for bmc and kind")
    p.add_argument("--refine", type=_modes, default=REFINE_MODES, metavar="MODES",
                   help="refinement chain, comma separated from itp,core,wp "
                        "(default itp,core,wp)")
    p.add_argument("--preds", metavar="FILE",
                   help="extra seed predicates, one SMT-LIB term per line")
    p.add_argument("--solver", metavar="CMD",
                   help="solver executable (default: z3 -in)")
    p.add_argument("--solver-arg", action="append", default=[], metavar="ARG",
                   help="argument passed to the solver (repeatable)")
    p.add_argument("--dump-invariant", metavar="FILE",
                   help="on safe, write the inductive invariant as a define-fun")
    p.add_argument("--dump-cex", metavar="FILE",
                   help="on unsafe, write the counterexample, one state per line")
    p.add_argument("--no-pred-reduction", action="store_true",
                   help="keep every predicate found by refinement")
    p.add_argument("--check-invariants", action="store_true",
                   help="check the frame invariants after every iteration")
    p.add_argument("--stats", action="store_true", help="print key=value statistics")
    p.add_argument("--budget", type=float, metavar="SECONDS",
                   help="time budget; unknown when exhausted")
    p.add_argument("--pred-log", metavar="FILE",
                   help="write one line per refinement to FILE")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _solver_config(args) -> SolverConfig:
    if args.solver is None:
        cmd = tuple(DEFAULT_COMMAND) + tuple(args.solver_arg)
    else:
        cmd = (args.solver, *args.solver_arg)
    return SolverConfig(command=cmd)


def _load_preds(path: str, ts) -> list:
    preds = []
    with open(path) as f:
        for n, line in enumerate(f, 1):
            line = line.split(";", 1)[0].strip()
            if not line:
                continue
            try:
                t = parse_state_formula(line, ts)
            except SmtLibError as e:
                raise SmtLibError(f"{path}:{n}: {e}") from None
            if not t.sort.is_bool:
                raise SmtLibError(f"{path}:{n}: predicate is not Boolean")
            preds.append(t)
    return preds


def _reference(args, ts, ctx) -> Verdict:
    try:
        if args.engine == "bmc":
            path = bmc(ts, args.depth, ctx)
            if path is not None:
                return Verdict("unsafe", path=path)
            return Verdict("unknown", reason=f"no counterexample up to depth {args.depth}")
        res, val = kind(ts, max(args.depth, 1), ctx)
    except UnknownResult as e:
        return Verdict("unknown", reason=f"solver returned unknown: {e.reason}")
    if res == "unsafe":
        return Verdict("unsafe", path=val)
    if res == "safe":
        return Verdict("safe", reason=f"{val}-inductive")
    return Verdict("unknown", reason=f"inconclusive at k={val}")


def _run(args, ts, out) -> int:
    cfg = _solver_config(args)
    if not cfg.available():
        raise SolverError(f"solver {cfg.command[0]!r} not found")
    if args.engine in ("bmc", "kind"):
        with SolverContext(cfg, args.engine) as ctx:
            verdict = _reference(args, ts, ctx)
    else:
        preds = _load_preds(args.preds, ts) if args.preds else []
        econf = EngineConfig(refine_modes=args.refine,
                             reduce_predicates=not args.no_pred_reduction,
                             check_invariants=args.check_invariants,
                             budget_seconds=args.budget, solver=cfg)
        verdict = IC3IA(ts, econf, preds).run()
        if args.pred_log:
            with open(args.pred_log, "w") as f:
                f.writelines(line + "\n" for line in verdict.stats.refinement_log)

    print(verdict.kind, file=out)
    if verdict.reason:
        print(f"reason: {verdict.reason}", file=sys.stderr)
    if args.stats:
        if args.engine == "ic3ia":
            for line in verdict.stats.lines():
                print(line, file=out)
        elif verdict.path is not None:
            print(f"cex_length={len(verdict.path)}", file=out)
    if verdict.is_safe and args.dump_invariant and verdict.invariant is not None:
        with open(args.dump_invariant, "w") as f:
            f.write(format_definition("invariant", verdict.invariant, ts))
    if verdict.is_unsafe and args.dump_cex:
        with open(args.dump_cex, "w") as f:
            f.write(verdict.path.format_witness(ts))
    return EXIT_UNKNOWN if verdict.kind == "unknown" else EXIT_OK


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    if args.engine in ("bmc", "kind") and args.depth is None:
        print(f"ic3ia: --depth is required with --engine {args.engine}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        with open(args.input) as f:
            text = f.read()
        ts, warnings = parse_vmt(text, args.property)
        for w in warnings:
            logging.getLogger("ic3ia").warning("%s: %s", os.path.basename(args.input), w)
        return _run(args, ts, out)
    except OSError as e:
        print(f"ic3ia: {e}", file=sys.stderr)
    except SmtLibError as e:
        print(f"ic3ia: {args.input}: {e}", file=sys.stderr)
    except (SolverError, UnknownResult) as e:
        print(f"ic3ia: solver error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
