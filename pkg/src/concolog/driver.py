"""Worklist loop that turns one seed goal into a choice-covering test suite.

Each popped goal runs under the lockstep engine; every choice point it hit
proposes alternative matched-clause subsets, and the solver tries to build
a new goal realizing each subset that no recorded trace already covers.
New goals keep the entry predicate's input argument positions ground, so
every emitted test case existentially terminates whenever the program
does.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .concolic import ChoiceRecord, ConcolicRunResult, Trace, concolic_run
from .concrete import DEFAULT_FUEL, FUEL_EXHAUSTED
from .solver import alt_k
from .terms import (
    Atom,
    NameSource,
    Program,
    Substitution,
    UNIF_NS,
    Variable,
    canonical,
    depth,
    is_ground,
    label_sort_key,
    variable_sort_key,
    variables,
)

DEFAULT_MAX_ALTERNATIVES = 64
DEFAULT_DEPTH_BOUND = 2

CONFIRMED = "confirmed"


@dataclass(frozen=True)
class Diverged:
    at: int


@dataclass(frozen=True)
class TestSpec:
    """What to test: program, entry predicate, input positions, bounds."""

    __test__ = False  # not a pytest class, despite the domain name

    program: Program
    entry: tuple[str, int]
    input_positions: frozenset[int]
    initial_goal: Atom
    depth_bound: int = DEFAULT_DEPTH_BOUND
    max_alternatives: int = DEFAULT_MAX_ALTERNATIVES
    fuel: int = DEFAULT_FUEL

    def validate(self) -> None:
        pred, arity = self.entry
        if self.initial_goal.indicator != self.entry:
            raise ValueError(
                f"initial goal {self.initial_goal} is not rooted at {pred}/{arity}")
        for i in self.input_positions:
            if not 1 <= i <= arity:
                raise ValueError(f"input position {i} out of range for {pred}/{arity}")
        if not self._inputs_ground(self.initial_goal):
            raise ValueError(
                f"input arguments of {self.initial_goal} must be ground")

    def _inputs_ground(self, goal: Atom) -> bool:
        return all(is_ground(goal.args[i - 1]) for i in sorted(self.input_positions))

    def input_args(self, goal: Atom) -> tuple:
        return tuple(goal.args[i - 1] for i in sorted(self.input_positions))


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class, despite the domain name

    goal: Atom
    trace: Trace
    outcome: str
    answer: Substitution | None


@dataclass
class SolverStats:
    candidates: int = 0
    skipped_prefix: int = 0
    alt_calls: int = 0
    alt_failures: int = 0
    alt_successes: int = 0
    rejected_depth: int = 0
    duplicate_goals: int = 0


@dataclass(frozen=True)
class DriverReport:
    test_cases: tuple[TestCase, ...]
    traces: tuple[Trace, ...]
    iterations: int
    solver_stats: SolverStats
    backstop_hit: bool = False


def _subset_sort_key(labels: frozenset[str]) -> tuple:
    return (len(labels), tuple(sorted(labels, key=label_sort_key)))


def alt_traces(run: ConcolicRunResult, choice_index: int,
               max_alternatives: int = DEFAULT_MAX_ALTERNATIVES,
               ) -> tuple[tuple[Trace, frozenset[str]], ...]:
    """Alternative (partial trace, target label set) pairs for one choice.

    Enumerates the powerset of the symbolically matched labels minus the
    taken set, by ascending cardinality then label order.  When the full
    powerset would exceed ``max_alternatives``, full choice coverage is
    abandoned: only the empty set and the singletons are proposed, which
    still suffice for clause coverage.
    """
    record = run.choices[choice_index]
    matched = sorted(record.symbolic_matched, key=label_sort_key)
    total = 2 ** len(matched) - 1
    if total > max_alternatives:
        subsets = [frozenset()] + [frozenset((l,)) for l in matched]
        subsets = [s for s in subsets if s != record.taken]
    else:
        subsets = [frozenset(c) for size in range(len(matched) + 1)
                   for c in itertools.combinations(matched, size)]
        subsets = [s for s in subsets if s != record.taken]
        subsets.sort(key=_subset_sort_key)
    return tuple((record.prefix + (s,), s) for s in subsets)


def _is_prefix_of_any(candidate: Trace, traces) -> bool:
    n = len(candidate)
    return any(len(t) >= n and t[:n] == candidate for t in traces)


def _strip_solver_vars(goal: Atom, names: NameSource) -> Atom:
    """Replace reserved solver variables with fresh program variables."""
    unif_vars = sorted((v for v in variables(goal) if v.namespace == UNIF_NS),
                       key=variable_sort_key)
    if not unif_vars:
        return goal
    return Substitution({v: names.fresh() for v in unif_vars}).apply(goal)


def _goal_key(goal: Atom):
    return canonical(goal)


def _count_terms(spec: TestSpec) -> int:
    """Distinct depth-bounded term skeletons, variables as one wildcard."""
    per_depth = [len(spec.program.constants) + 2]  # + reserved constant + wildcard
    for _ in range(spec.depth_bound):
        below = sum(per_depth)
        per_depth.append(sum(below ** arity for _, arity in spec.program.functors))
    return sum(per_depth)


def iteration_backstop(spec: TestSpec) -> int:
    """Hard bound on worklist pops; generated goals are finite, this guards bugs."""
    _, arity = spec.entry
    skeletons = _count_terms(spec) ** max(arity, 1)
    return min(20_000, max(16, 4 * skeletons))


def run_concolic_testing(spec: TestSpec) -> DriverReport:
    """The main loop: pop a goal, run it, branch on its choice points.

    A proposed trace is pursued only if it does not prefix a recorded
    trace; a solved goal is enqueued only if its arguments respect the
    depth bound and it is new modulo variable renaming.
    """
    spec.validate()
    program = spec.program
    names = NameSource(avoid=variables(spec.initial_goal))
    pending: deque[Atom] = deque([spec.initial_goal])
    known_goals = {_goal_key(spec.initial_goal)}
    test_cases: list[TestCase] = []
    traces: list[Trace] = []
    trace_set: set[Trace] = set()
    stats = SolverStats()
    budget = iteration_backstop(spec)
    iterations = 0
    # identical unsolvable alternatives recur across runs (same choice
    # point, same target); remember them by shape to skip re-solving
    known_failures: set = set()
    while pending and iterations < budget:
        goal = pending.popleft()
        iterations += 1
        run = concolic_run(goal, program, fuel=spec.fuel, names=names)
        test_cases.append(TestCase(goal, run.trace, run.kind, run.concrete_answer))
        if run.trace not in trace_set:
            trace_set.add(run.trace)
            traces.append(run.trace)
        for index in range(len(run.choices)):
            record = run.choices[index]
            for candidate_trace, target in alt_traces(run, index, spec.max_alternatives):
                stats.candidates += 1
                if _is_prefix_of_any(candidate_trace, trace_set):
                    stats.skipped_prefix += 1
                    continue
                entry_theta = record.symbolic_answer.apply(run.symbolic_goal)
                ground_set = variables(spec.input_args(entry_theta))
                problem_key = (canonical((record.symbolic_selected_atom,
                                          tuple(sorted(ground_set, key=variable_sort_key)))),
                               target, record.symbolic_matched)
                if problem_key in known_failures:
                    stats.alt_failures += 1
                    continue
                stats.alt_calls += 1
                theta_prime = alt_k(record.symbolic_selected_atom, target,
                                    record.symbolic_matched, ground_set,
                                    program, spec.depth_bound, names=names)
                if theta_prime is None:
                    known_failures.add(problem_key)
                    stats.alt_failures += 1
                    continue
                stats.alt_successes += 1
                combined = record.symbolic_answer.compose(theta_prime)
                new_goal = _strip_solver_vars(combined.apply(run.symbolic_goal), names)
                if any(depth(arg) > spec.depth_bound for arg in new_goal.args):
                    stats.rejected_depth += 1
                    continue
                if not spec._inputs_ground(new_goal):
                    raise AssertionError(
                        f"solver returned non-ground input arguments: {new_goal}")
                key = _goal_key(new_goal)
                if key in known_goals:
                    stats.duplicate_goals += 1
                    continue
                known_goals.add(key)
                pending.append(new_goal)
    return DriverReport(tuple(test_cases), tuple(traces), iterations, stats,
                        backstop_hit=bool(pending))


def replay_check(tc: TestCase, predicted_prefix: Trace, program: Program,
                 fuel: int = DEFAULT_FUEL):
    """Rerun a test case and compare its trace against a predicted prefix.

    Detects the classic concolic divergence: the solver aimed a goal at a
    path, but nothing guarantees the rerun follows it.
    """
    run = concolic_run(tc.goal, program, fuel=fuel,
                       names=NameSource(avoid=variables(tc.goal)))
    for i, expected in enumerate(predicted_prefix):
        if i >= len(run.trace) or run.trace[i] != expected:
            return Diverged(i)
    return CONFIRMED
