"""Batch command-line front end.

Subcommands: ``run`` (generate a test suite and measure its coverage),
``exec`` (run one goal, optionally showing the derivation), ``coverage``
(measure a suite file), ``solve`` (poke the unifiability solver).  Output
is deterministic: identical invocations produce identical bytes, and the
text tables for ``run`` are rendered from the same dictionary that the
JSON report serializes.  The environment variable ``CONTEST_SEED`` is
reserved and ignored; nothing here is randomized.
"""

from __future__ import annotations

import argparse
import json
import sys

from .concolic import InvariantViolationError, concolic_run
from .concrete import (
    FUEL_EXHAUSTED,
    DEFAULT_FUEL,
    StuckStateError,
    UnknownPredicateError,
    concrete_run,
)
from .coverage import CoverageReport, measure
from .driver import DEFAULT_MAX_ALTERNATIVES, TestSpec, run_concolic_testing
from .parser import (
    NonAtomicGoalError,
    ParseError,
    UnsupportedFeatureError,
    parse_goal,
    parse_program_file,
)
from .solver import SolverSignature, UnifProblem, pos_neg
from .terms import (
    NameSource,
    Substitution,
    atom_to_text,
    label_set_to_text,
    label_sort_key,
    term_to_text,
    trace_to_text,
    variable_sort_key,
    variables,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_ENGINE = 3


class UsageError(Exception):
    pass


def _parse_positions(text: str) -> frozenset[int]:
    try:
        positions = frozenset(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"bad input positions {text!r}; expected e.g. 1,3")
    if not positions:
        raise UsageError("at least one input position is required")
    return positions


def _answer_text(answer: Substitution | None) -> str:
    if answer is None or not len(answer):
        return ""
    return ", ".join(f"{v} = {term_to_text(t)}" for v, t in answer.items())


def _coverage_dict(report: CoverageReport) -> dict:
    sites = {}
    for (pred, arity), sets in sorted(report.choice_sites.items()):
        sites[f"{pred}/{arity}"] = sorted(
            (sorted(s, key=label_sort_key) for s in sets),
            key=lambda labels: (len(labels), labels))
    covered = len(report.covered_labels)
    total = len(report.per_clause_counts)
    return {
        "note": report.note,
        "clause_coverage": f"{covered}/{total}",
        "per_clause_counts": {label: report.per_clause_counts[label]
                              for label in sorted(report.per_clause_counts, key=label_sort_key)},
        "choice_sites": sites,
        "outcomes": [{"goal": atom_to_text(goal), "outcome": kind}
                     for goal, kind in report.per_test_outcomes],
    }


def render_coverage_text(cov: dict) -> str:
    lines = [f"coverage ({cov['note']}):",
             f"  clause coverage: {cov['clause_coverage']}"]
    for label, count in cov["per_clause_counts"].items():
        lines.append(f"  {label}: {count}")
    for site, sets in cov["choice_sites"].items():
        rendered = " ".join("{" + ",".join(labels) + "}" for labels in sets)
        lines.append(f"  choice site {site}: {rendered}")
    return "\n".join(lines)


def render_run_report(report: dict) -> str:
    lines = [f"program: {report['program']}",
             f"goal: {report['goal']}",
             f"depth bound: {report['k']}",
             f"test cases ({len(report['test_cases'])}):"]
    width = max((len(tc["goal"]) for tc in report["test_cases"]), default=0)
    for tc in report["test_cases"]:
        trace = "(" + ",".join("{" + ",".join(s) + "}" for s in tc["trace"]) + ")"
        lines.append(f"  {tc['goal']:<{width}}  {trace}  {tc['outcome']}")
    lines.append(render_coverage_text(report["coverage"]))
    return "\n".join(lines)


def _cmd_run(args) -> int:
    program = parse_program_file(args.file)
    goal = parse_goal(args.goal)
    spec = TestSpec(program, goal.indicator, _parse_positions(args.inp), goal,
                    depth_bound=args.depth, max_alternatives=args.max_alts,
                    fuel=args.fuel)
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc))
    report = run_concolic_testing(spec)
    cov = measure(program, [tc.goal for tc in report.test_cases], fuel=args.fuel)
    doc = {
        "schema": 1,
        "program": args.file,
        "goal": atom_to_text(goal),
        "k": args.depth,
        "test_cases": [
            {"goal": atom_to_text(tc.goal),
             "trace": [sorted(s, key=label_sort_key) for s in tc.trace],
             "outcome": tc.outcome}
            for tc in report.test_cases
        ],
        "coverage": _coverage_dict(cov),
    }
    print(render_run_report(doc))
    if report.backstop_hit:
        print("note: iteration backstop reached before the worklist drained")
    if any(tc.outcome == FUEL_EXHAUSTED for tc in report.test_cases):
        print("note: some runs exhausted their fuel; coverage may be partial")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def _cmd_exec(args) -> int:
    program = parse_program_file(args.file)
    goal = parse_goal(args.goal)
    if args.show_concolic:
        def observe(label, rule, state):
            note = f" {label}" if label.is_choice else ""
            print(f"  --{rule}{note}")
            if hasattr(state, "concrete"):
                conc = " | ".join(str(g) for g in state.concrete)
                sym = " | ".join(str(g) for g in state.symbolic)
                print(f"  < {conc} ][ {sym} >")

        result = concolic_run(goal, program, fuel=args.fuel, observer=observe)
        print(f"trace: {trace_to_text(result.trace)}")
        if result.kind == FUEL_EXHAUSTED:
            print(f"FUEL EXHAUSTED ({result.steps} steps)")
        else:
            kind = "SUCCESS" if result.kind == "success" else "FAIL"
            conc = _answer_text(result.concrete_answer)
            sym = _answer_text(result.symbolic_answer)
            print(f"{kind} {conc}".rstrip())
            print(f"symbolic answer: {result.symbolic_answer}" if sym else
                  "symbolic answer: {}")
        return EXIT_OK
    observer = None
    if args.show_derivation:
        def observer(info, state):  # noqa: ANN001 - small local callback
            print(f"  --{info.rule}--> {state}")

    result = concrete_run(goal, program, fuel=args.fuel, observer=observer)
    if result.kind == FUEL_EXHAUSTED:
        print(f"FUEL EXHAUSTED ({result.steps} steps)")
    elif result.kind == "success":
        print(f"SUCCESS {_answer_text(result.answer)}".rstrip())
    else:
        print("FAIL")
    return EXIT_OK


def _cmd_coverage(args) -> int:
    program = parse_program_file(args.file)
    goals = []
    with open(args.suite, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("%", 1)[0].strip()
            if line:
                goals.append(parse_goal(line))
    report = measure(program, goals, fuel=args.fuel, threads=args.threads)
    doc = _coverage_dict(report)
    print(render_coverage_text(doc))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def _cmd_solve(args) -> int:
    subject = parse_goal(args.atom)
    pos = tuple(parse_goal(text) for text in args.pos or ())
    neg = tuple(parse_goal(text) for text in args.neg or ())
    ground = frozenset()
    if args.ground:
        by_name = {v.name: v for v in variables(subject)}
        names = [n.strip() for n in args.ground.split(",") if n.strip()]
        missing = [n for n in names if n not in by_name]
        if missing:
            raise UsageError(f"ground variables not in the atom: {missing}")
        ground = frozenset(by_name[n] for n in names)
    prob = UnifProblem(subject, pos, neg, ground, args.depth)
    try:
        prob.validate()
    except ValueError as exc:
        raise UsageError(str(exc))
    sig = SolverSignature.from_atoms((subject,) + pos + neg)
    trace: list[str] | None = [] if args.solver_trace else None
    result = pos_neg(prob, sig, trace=trace)
    if trace is not None:
        for line in trace:
            print(f"  {line}")
    print("FAIL" if result is None else str(result))
    return EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concolog",
        description="Concolic test-case generation for pure logic programs.",
        epilog="CONTEST_SEED is reserved and ignored: output is deterministic.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="generate a choice-covering test suite")
    run.add_argument("file")
    run.add_argument("--goal", required=True)
    run.add_argument("--inp", required=True, help="comma-separated input positions, e.g. 1,3")
    run.add_argument("--depth", type=int, default=2)
    run.add_argument("--max-alts", type=int, default=DEFAULT_MAX_ALTERNATIVES)
    run.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    run.add_argument("--json", metavar="OUT")

    exec_ = sub.add_parser("exec", help="run a single goal")
    exec_.add_argument("file")
    exec_.add_argument("--goal", required=True)
    exec_.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    show = exec_.add_mutually_exclusive_group()
    show.add_argument("--show-derivation", action="store_true")
    show.add_argument("--show-concolic", action="store_true")

    cov = sub.add_parser("coverage", help="measure a suite file")
    cov.add_argument("file")
    cov.add_argument("--suite", required=True)
    cov.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    cov.add_argument("--threads", type=int, default=1)
    cov.add_argument("--json", metavar="OUT")

    solve = sub.add_parser("solve", help="query the unifiability solver")
    solve.add_argument("--atom", required=True)
    solve.add_argument("--pos", action="append", default=[])
    solve.add_argument("--neg", action="append", default=[])
    solve.add_argument("--ground", default="")
    solve.add_argument("--depth", type=int, default=2)
    solve.add_argument("--solver-trace", action="store_true")
    return parser


_COMMANDS = {"run": _cmd_run, "exec": _cmd_exec, "coverage": _cmd_coverage,
             "solve": _cmd_solve}


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, UnknownPredicateError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, UnsupportedFeatureError, NonAtomicGoalError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (StuckStateError, InvariantViolationError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
