"""Command line interface.

Exit status: 0 on success, 1 when ``reorder --strict`` finds no legitimate
reordering, 2 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from bellseries import fixtures
from bellseries.completion import (
    FreeChoice,
    complete_table,
    enumerate_completions,
    resample_schedule,
)
from bellseries.estimators import (
    PER_COINCIDENCE,
    PER_SLOT,
    EstimatorError,
    ch_j,
    chsh,
    efficiency,
    to_ch_encoding,
)
from bellseries.fileio import (
    emit_runfile,
    emit_tablefile,
    parse_runfile,
    parse_tablefile,
)
from bellseries.reorder import feasibility, minimal_discard_fraction
from bellseries.report import CompletionSummary, Note, dumps_structured, emit_report
from bellseries.simulator import (
    CHSH_ANGLES,
    DetectionChannel,
    LhvModel,
    QmModel,
    SimulationError,
    make_schedule,
    simulate,
)
from bellseries.table_model import (
    CompleteTable,
    RunTable,
    SettingLabels,
    SettingSchedule,
    TableError,
    normalize_schedule,
)

log = logging.getLogger("bellseries")

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _print_report(items, labels, fmt: str, out=None) -> None:
    out = out or sys.stdout
    text, sections = emit_report(items, labels)
    out.write(dumps_structured(sections) if fmt == "json" else text)


def cmd_simulate(args) -> int:
    angles = tuple(args.angles)
    model = QmModel(angles) if args.model == "qm" else LhvModel(angles)
    labels = SettingLabels(angles=tuple(a % 180.0 for a in angles))
    schedule = make_schedule(args.q, args.schedule, seed=args.seed, labels=labels)
    eta_a = args.eta if args.eta_a is None else args.eta_a
    eta_b = args.eta if args.eta_b is None else args.eta_b
    table = simulate(model, schedule, DetectionChannel(eta_a, eta_b), seed=args.seed)
    text = emit_runfile(table)
    if args.output:
        Path(args.output).write_text(text)
        log.info("wrote %d slots to %s", len(table), args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _analyze_one(table: RunTable, mode: str) -> list:
    items: list = []
    try:
        items.append(chsh(table, mode))
    except EstimatorError as exc:
        items.append(Note("chsh", f"unavailable ({exc})"))
    try:
        items.append(ch_j(to_ch_encoding(table)))
    except EstimatorError as exc:
        items.append(Note("ch", f"unavailable ({exc})"))
    items.append(efficiency(table))
    return items


def cmd_analyze(args) -> int:
    for path in args.runfiles:
        table = parse_runfile(path)
        items = [Note("file", path)] + _analyze_one(table, args.mode)
        _print_report(items, table.labels, args.format)
    return EXIT_OK


def cmd_reorder(args) -> int:
    table = normalize_schedule(parse_runfile(args.runfile))
    outcome = feasibility(table, args.budget, coincident_only=args.coincident_only)
    items: list = [outcome]
    if args.min_discard:
        frac = minimal_discard_fraction(table, coincident_only=args.coincident_only)
        items.append(Note("minimal_discard_fraction", f"{frac:.6g}"))
    _print_report(items, table.labels, args.format)
    if outcome.feasible and args.condensed_out:
        emit_tablefile(outcome.condensed, args.condensed_out)
    if args.strict and not outcome.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_complete(args) -> int:
    table = normalize_schedule(parse_runfile(args.runfile))
    allow = not args.no_discards
    if args.enumerate:
        family = enumerate_completions(table, allow)
        tables = list(family)
        if args.output:
            outdir = Path(args.output)
            outdir.mkdir(parents=True, exist_ok=True)
            for k, t in enumerate(tables):
                emit_tablefile(t, outdir / f"completion_{k:05d}.json")
        choices = tuple(FreeChoice.from_index(k, family.q).render() for k in range(len(family)))
        summary = CompletionSummary(
            len(family),
            any(t.with_discards for t in tables),
            tables if args.show else (),
            choices if args.show else (),
        )
        _print_report([summary], table.labels, args.format)
        return EXIT_OK
    choice = FreeChoice.parse(args.choice) if args.choice else None
    result = complete_table(table, choice, allow)
    if args.output:
        emit_tablefile(result, args.output)
    _print_report([result], table.labels, args.format)
    return EXIT_OK


def _parse_schedule_codes(text: str, labels: SettingLabels) -> SettingSchedule:
    pairs = []
    for code in text.split(","):
        code = code.strip()
        if len(code) != 2 or any(c not in "01" for c in code):
            raise InputError(f"schedule code {code!r} must be two digits 0/1 (alice, bob)")
        pairs.append((int(code[0]), int(code[1])))
    return SettingSchedule.from_pairs(pairs, labels)


def cmd_resample(args) -> int:
    complete = parse_tablefile(args.tablefile)
    if not isinstance(complete, CompleteTable):
        raise InputError("resample needs a complete table file")
    schedule = _parse_schedule_codes(args.schedule, complete.labels)
    table = resample_schedule(complete, schedule)
    text = emit_runfile(table)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, make in fixtures.ALL.items():
        table = make()
        if isinstance(table, RunTable):
            emit_runfile(table, outdir / f"{name}.csv")
        else:
            emit_tablefile(table, outdir / f"{name}.json")
        log.info("wrote %s", name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellseries", description="Time-series analysis of Bell experiment runs."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a run file")
    p.add_argument("--model", choices=("qm", "lhv"), default="qm")
    p.add_argument(
        "--angles", type=float, nargs=4, default=CHSH_ANGLES,
        metavar=("ALPHA", "ALPHA_P", "BETA", "BETA_P"),
    )
    p.add_argument("--q", type=int, default=1000, help="slots per setting pair")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--eta-a", type=float)
    p.add_argument("--eta-b", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schedule", choices=("block", "shuffled", "random"), default="block")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="S, J and efficiencies of run files")
    p.add_argument("runfiles", nargs="+")
    p.add_argument("--mode", choices=(PER_COINCIDENCE, PER_SLOT), default=PER_COINCIDENCE)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reorder", help="look for a legitimate reordering into Sica form")
    p.add_argument("runfile")
    p.add_argument("--budget", type=float, default=0.0, help="discard fraction per quarter")
    p.add_argument("--strict", action="store_true", help="exit 1 when infeasible")
    p.add_argument("--coincident-only", action="store_true")
    p.add_argument("--min-discard", action="store_true", help="also report the minimal discard fraction")
    p.add_argument("--condensed-out")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_reorder)

    p = sub.add_parser("complete", help="fill counterfactual cells")
    p.add_argument("runfile")
    p.add_argument("--choice", help="free series as '+-:-+' (a under alpha', a' under alpha)")
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--show", action="store_true", help="print every enumerated table")
    p.add_argument("--no-discards", action="store_true")
    p.add_argument("-o", "--output", help="table file (directory with --enumerate)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("resample", help="read a complete table under another schedule")
    p.add_argument("tablefile")
    p.add_argument(
        "--schedule", required=True,
        help="comma-separated per-slot codes, e.g. 00,00,01,01 (alice index, bob index)",
    )
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("fixtures", help="write the worked example tables")
    p.add_argument("-o", "--output", default="fixtures")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s"
    )
    try:
        return args.func(args)
    except (TableError, EstimatorError, SimulationError, InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
