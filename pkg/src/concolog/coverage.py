"""Clause and choice coverage of a test suite under the concrete engine.

Counts how often each clause is unfolded while computing first answers
(one execution per goal, no backtracking past the first solution) and
records, per predicate, which matched-clause label sets showed up at
choice steps.  First-answer counting is stated in the report header: a
coverage tool that explores all solutions will generally count more.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .concrete import ConcreteRunResult, DEFAULT_FUEL, StepInfo, concrete_run
from .terms import Atom, NameSource, Program, variables

HEADER_NOTE = "first-answer executions only"


@dataclass
class CoverageReport:
    per_clause_counts: dict[str, int]
    clause_coverage: Fraction
    choice_sites: dict[tuple[str, int], set[frozenset[str]]]
    per_test_outcomes: list[tuple[Atom, str]]
    note: str = HEADER_NOTE

    @property
    def covered_labels(self) -> set[str]:
        return {label for label, n in self.per_clause_counts.items() if n > 0}


def _run_one(program: Program, goal: Atom, fuel: int):
    events: list[StepInfo] = []
    result = concrete_run(goal, program, fuel=fuel,
                          names=NameSource(avoid=variables(goal)),
                          observer=lambda info, _state: events.append(info))
    return result, events


def measure(program: Program, suite, fuel: int = DEFAULT_FUEL,
            threads: int = 1) -> CoverageReport:
    """Run every goal and aggregate unfold counts and choice-site label sets.

    Counts are order-insensitive; per-goal runs are independent, so a
    thread pool may execute them, with results merged in suite order.
    """
    goals = list(suite)
    counts = {clause.label: 0 for clause in program.clauses}
    sites: dict[tuple[str, int], set[frozenset[str]]] = {}
    outcomes: list[tuple[Atom, str]] = []
    if threads > 1 and len(goals) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda g: _run_one(program, g, fuel), goals))
    else:
        runs = [_run_one(program, goal, fuel) for goal in goals]
    for goal, (result, events) in zip(goals, runs):
        outcomes.append((goal, result.kind))
        for info in events:
            if info.rule == "unfold":
                counts[info.clause.label] += 1
            elif info.rule in ("choice", "choice_fail"):
                sites.setdefault(info.selected.indicator, set()).add(info.matched)
    covered = sum(1 for n in counts.values() if n > 0)
    fraction = Fraction(covered, len(counts)) if counts else Fraction(0)
    return CoverageReport(counts, fraction, sites, outcomes)
