"""Command-line front end: run, enumerate, validate, list-scenarios.

Exit codes: 0 success, 1 usage error (bad arguments, unknown scenario,
unreadable file), 2 the scenario or check itself failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .adversary import MAX_DEPTH, enumerate_adversarial
from .report import report_from_trace, validate_events
from .scenarios import Scenario, ScenarioError, builtin_scenarios, enumeration_base, get_scenario, run_scenario
from .trace import MalformedTrace, TraceEvent

TRACE_DIR_ENV = "ATOMIC_LOANS_TRACE_DIR"
EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _depth(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid depth {text!r}") from None
    if not 0 <= k <= MAX_DEPTH:
        raise argparse.ArgumentTypeError(f"depth {k} exceeds the cap of {MAX_DEPTH}")
    return k


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="atomic-loans", description="Two-ledger atomic loan simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a builtin or file-defined scenario")
    r.add_argument("--scenario", required=True, help="builtin name or path to a scenario file")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.add_argument("--trace", type=Path, help=f"write the JSON-lines trace here (default: ${TRACE_DIR_ENV}/<label>.jsonl)")
    r.add_argument("--report", type=Path, help="write the outcome report here instead of stdout")

    e = sub.add_parser("enumerate", help="exhaustively search adversarial deviations")
    e.add_argument("--honest", default="", help="comma-separated honest parties")
    e.add_argument("--depth", type=_depth, required=True, help=f"max deviations per run (cap {MAX_DEPTH})")
    e.add_argument("--terms", type=Path, help="scenario file to use as the base loan")
    e.add_argument("--out", type=Path, help="write the first violation as a replayable scenario file")

    v = sub.add_parser("validate", help="replay a trace and check it reproduces")
    v.add_argument("--trace", type=Path, required=True)

    sub.add_parser("list-scenarios", help="list builtin scenarios")
    return p


def _load_scenario(ref: str) -> Scenario:
    try:
        return get_scenario(ref)
    except KeyError:
        pass
    path = Path(ref)
    if not path.exists():
        raise UsageError(f"unknown scenario {ref!r} (not a builtin name or an existing file)")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    return Scenario.from_config(text)


def cmd_run(args) -> int:
    s = _load_scenario(args.scenario)
    if args.seed is not None:
        s = s.with_seed(args.seed)
    trace, outcome = run_scenario(s)
    trace_path = args.trace
    if trace_path is None and os.environ.get(TRACE_DIR_ENV):
        trace_path = Path(os.environ[TRACE_DIR_ENV]) / f"{s.label}.jsonl"
    if trace_path is not None:
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        trace_path.write_text(trace.dumps(), encoding="utf-8", newline="\n")
    text = report_from_trace(trace.events).to_text()
    problems = ([] if outcome.conservation else ["conservation violated"]) + outcome.liveness
    if problems:
        text += "\nproblems:\n" + "".join(f"  {p}\n" for p in problems)
    if args.report is not None:
        args.report.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if problems:
        print(f"scenario {s.label} failed: {problems[0]}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_enumerate(args) -> int:
    base = _load_scenario(str(args.terms)) if args.terms else enumeration_base()
    honest = [h.strip() for h in args.honest.split(",") if h.strip()]
    names = {p.name for p in base.parties}
    unknown = [h for h in honest if h not in names]
    if unknown:
        raise UsageError(f"unknown parties in --honest: {', '.join(unknown)}")
    res = enumerate_adversarial(base, honest, args.depth)
    print(f"honest: {','.join(sorted(honest)) or '(none)'}  depth: {args.depth}  "
          f"states: {res.states}  complete runs: {res.runs}")
    print(f"violations: {len(res.violations)}")
    if not res.violations:
        return EXIT_OK
    first = res.violations[0]
    print(f"first violation: {first.predicate} ({first.party}) {first.detail}")
    for party, move, option in first.decisions:
        print(f"  {party}.{move} = {option}")
    config = first.as_scenario(base).to_config()
    if args.out:
        args.out.write_text(config, encoding="utf-8")
        print(f"replayable scenario written to {args.out}")
    else:
        print("replayable scenario:")
        sys.stdout.write(config)
    return EXIT_FAILED


def cmd_validate(args) -> int:
    try:
        raw = args.trace.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc}") from None
    lines = raw.splitlines()
    events = []
    try:
        for n, line in enumerate(lines, 1):
            try:
                events.append(TraceEvent.from_json(line))
            except (ValueError, TypeError) as exc:
                raise MalformedTrace(n, str(exc)) from None
    except MalformedTrace as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_FAILED
    result = validate_events(events, lines)
    if result.ok:
        print(f"ok: {result.message}")
        return EXIT_OK
    print(f"divergence at line {result.line}: {result.message}", file=sys.stderr)
    return EXIT_FAILED


def cmd_list(args) -> int:
    for s in builtin_scenarios():
        print(f"{s.label:<28} {s.description}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "enumerate": cmd_enumerate, "validate": cmd_validate,
            "list-scenarios": cmd_list}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
