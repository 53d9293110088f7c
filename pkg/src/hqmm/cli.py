"""Command-line entry point.

Exit status: 0 on success, 1 when a machine fails validation, 2 on I/O or
configuration errors (including unknown subcommands).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .errors import ContractError, DomainError, ValidationError
from .experiment import DEFAULT_BINS, ExperimentConfig, envelope, read_scatter_csv, run_scatter
from .models import HqmmModel, format_word, kraus_deviation, parse_word
from .serialization import load_machine
from .stationary import DEFAULT_MAX_ITER, DEFAULT_TOL, stationary
from .trajectory import DEFAULT_BURN_IN, RngSeed, empirical_word_prob, simulate
from .wordprob import word_prob

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


def _cmd_validate(args) -> int:
    machine = load_machine(args.machine)
    kind = type(machine).__name__
    if isinstance(machine, HqmmModel):
        print(f"valid {kind}: completeness deviation {kraus_deviation(machine.k_a, machine.k_b):.3g}")
    else:
        print(f"valid {kind}")
    return EXIT_OK


def _cmd_stationary(args) -> int:
    machine = load_machine(args.machine)
    report = stationary(machine, args.tol, args.max_iter)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def _cmd_wordprob(args) -> int:
    machine = load_machine(args.machine)
    word = parse_word(args.word)
    report = stationary(machine, args.tol, args.max_iter)
    if not report.converged:
        print(f"warning: stationary solver did not converge (residual {report.residual:.3g})", file=sys.stderr)
    print(repr(word_prob(machine, report.state, word)))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    machine = load_machine(args.machine)
    word = parse_word(args.word)
    record = simulate(machine, args.steps, args.burn_in, RngSeed(args.seed, args.stream))
    est = empirical_word_prob(record, word)
    out = {"word": format_word(word), "steps": record.steps, "burn_in": args.burn_in, "estimate": est.to_dict()}
    if args.out:
        Path(args.out).write_text(record.text() + "\n")
        out["trajectory_file"] = str(args.out)
    else:
        out["trajectory"] = record.text()
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_scatter(args) -> int:
    config = ExperimentConfig.load(args.config)
    if args.workers is not None:
        config.workers = args.workers
    records = run_scatter(config)
    kept = sum(r.converged for r in records)
    print(f"wrote {kept} records ({len(records) - kept} excluded) to {config.output_path}")
    return EXIT_OK


def _cmd_envelope(args) -> int:
    records = []
    for path in args.csv:
        records.extend(read_scatter_csv(path))
    report = envelope(records, args.bins)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.format_table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_opts(p):
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)

    p = sub.add_parser("validate", help="run the class validator on a machine JSON file")
    p.add_argument("machine")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("stationary", help="print the stationary fixed-point report")
    p.add_argument("machine")
    solver_opts(p)
    p.set_defaults(func=_cmd_stationary)

    p = sub.add_parser("wordprob", help="analytic stationary word probability")
    p.add_argument("machine")
    p.add_argument("word")
    solver_opts(p)
    p.set_defaults(func=_cmd_wordprob)

    p = sub.add_parser("simulate", help="Monte Carlo trajectory and empirical word frequency")
    p.add_argument("machine")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--word", default="BAAAB")
    p.add_argument("--out", help="write the trajectory text here instead of embedding it in the JSON")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("scatter", help="run a scatter experiment config")
    p.add_argument("config")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_scatter)

    p = sub.add_parser("envelope", help="per-bin envelope of scatter CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_envelope)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_IO
    try:
        return args.func(args)
    except (ValidationError, DomainError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ContractError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
