"""First-answer operational semantics as a deterministic small-step machine.

A state is a backtracking stack of goals, each labeled with the answer
substitution accumulated so far (restricted to the initial goal's
variables) and, right after a choice step, with the clause to unfold next.
Exactly one rule applies to every running state; the engine checks that
mutual exclusion on each step and treats any gap as an internal bug.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .terms import (
    Atom,
    Clause,
    EMPTY_SUBSTITUTION,
    NameSource,
    Program,
    Substitution,
    Variable,
    mgu,
    rename_apart,
    variables,
)

# Reserved zero-arity atom standing for a failed leftmost goal; the parser
# rejects it in user programs so the namespace stays closed.
FAIL_ATOM = Atom("fail", ())

DEFAULT_FUEL = 100_000

SUCCESS = "success"
FAILED = "failed"
FUEL_EXHAUSTED = "fuel_exhausted"


class StuckStateError(Exception):
    """No semantics rule applies: an engine bug, never a user error."""


class UnknownPredicateError(Exception):
    pass


Goal = tuple[Atom, ...]  # the empty tuple is the goal `true`


@dataclass(frozen=True)
class LabeledGoal:
    goal: Goal
    answer: Substitution
    clause: Clause | None = None

    def __str__(self) -> str:
        body = "true" if not self.goal else ",".join(str(a) for a in self.goal)
        note = f"^{self.clause.label}" if self.clause else ""
        return f"{body}_{self.answer}{note}"


@dataclass(frozen=True)
class Running:
    stack: tuple[LabeledGoal, ...]

    def __str__(self) -> str:
        return "<" + " | ".join(str(g) for g in self.stack) + ">"


@dataclass(frozen=True)
class Success:
    answer: Substitution

    def __str__(self) -> str:
        return f"<SUCCESS_{self.answer}>"


@dataclass(frozen=True)
class Failed:
    answer: Substitution

    def __str__(self) -> str:
        return f"<FAIL_{self.answer}>"


ConcreteState = Running | Success | Failed


@dataclass(frozen=True)
class StepInfo:
    """What a single step did; consumed by observers and coverage."""

    rule: str
    selected: Atom | None = None
    matched: frozenset[str] | None = None
    clause: Clause | None = None


Observer = Callable[[StepInfo, ConcreteState], None]


@dataclass(frozen=True)
class ConcreteRunResult:
    kind: str
    answer: Substitution | None
    steps: int
    rules: tuple[str, ...]
    states: tuple[ConcreteState, ...] | None = None

    def __str__(self) -> str:
        if self.kind == FUEL_EXHAUSTED:
            return f"FUEL_EXHAUSTED({self.steps})"
        return f"{self.kind.upper()}({self.answer})"


def initial_state(goal: Atom) -> Running:
    return Running(((LabeledGoal((goal,), EMPTY_SUBSTITUTION)),))


def clauses_for(atom: Atom, program: Program, names: NameSource) -> tuple[Clause, ...]:
    """Renamed-apart clauses, in program order, whose head unifies with ``atom``."""
    out = []
    for clause in program.clauses:
        if clause.head.indicator != atom.indicator:
            continue
        fresh = rename_apart(clause, names)
        if mgu(atom, fresh.head) is not None:
            out.append(fresh)
    return tuple(out)


def rule_for(state: Running, program: Program,
             names: NameSource) -> tuple[str, tuple[Clause, ...]]:
    """The unique applicable rule, asserting mutual exclusion of all guards."""
    head = state.stack[0]
    guards = []
    matching: tuple[Clause, ...] = ()
    if head.goal == ():
        guards.append("success")
    if head.goal and head.goal[0] == FAIL_ATOM:
        guards.append("failure" if len(state.stack) == 1 else "backtrack")
    if head.goal and head.goal[0] != FAIL_ATOM:
        if head.clause is not None:
            guards.append("unfold")
        else:
            matching = clauses_for(head.goal[0], program, names)
            guards.append("choice" if matching else "choice_fail")
    if len(guards) != 1:
        raise StuckStateError(f"expected exactly one applicable rule, got {guards} at {state}")
    return guards[0], matching


def unfold_goal(entry: LabeledGoal,
                restrict_to: frozenset[Variable] | None) -> LabeledGoal:
    """Resolve the selected atom against the annotated clause."""
    clause = entry.clause
    assert clause is not None
    sigma = mgu(entry.goal[0], clause.head)
    if sigma is None:
        raise StuckStateError(f"annotated clause no longer unifies with {entry.goal[0]}")
    new_goal = sigma.apply(clause.body + entry.goal[1:])
    answer = entry.answer.compose(sigma)
    if restrict_to is not None:
        answer = answer.restrict(restrict_to)
    return LabeledGoal(new_goal, answer)


def concrete_step(state: Running, program: Program, names: NameSource,
                  restrict_to: frozenset[Variable] | None = None,
                  ) -> tuple[StepInfo, ConcreteState]:
    """Apply the single rule determined by the state shape."""
    rule, matching = rule_for(state, program, names)
    head, *rest = state.stack
    if rule == "success":
        return StepInfo(rule), Success(head.answer)
    if rule == "failure":
        return StepInfo(rule), Failed(head.answer)
    if rule == "backtrack":
        return StepInfo(rule), Running(tuple(rest))
    if rule == "choice":
        copies = tuple(LabeledGoal(head.goal, head.answer, clause) for clause in matching)
        info = StepInfo(rule, selected=head.goal[0],
                        matched=frozenset(c.label for c in matching))
        return info, Running(copies + tuple(rest))
    if rule == "choice_fail":
        failed_goal = LabeledGoal((FAIL_ATOM,) + head.goal[1:], head.answer)
        info = StepInfo(rule, selected=head.goal[0], matched=frozenset())
        return info, Running((failed_goal,) + tuple(rest))
    info = StepInfo("unfold", selected=head.goal[0], clause=head.clause)
    return info, Running((unfold_goal(head, restrict_to),) + tuple(rest))


def concrete_run(goal: Atom, program: Program, fuel: int = DEFAULT_FUEL,
                 names: NameSource | None = None, observer: Observer | None = None,
                 log_states: bool = False) -> ConcreteRunResult:
    """Iterate steps to the first answer, finite failure, or fuel exhaustion."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    if names is None:
        names = NameSource(avoid=variables(goal))
    goal_vars = variables(goal)
    state: ConcreteState = initial_state(goal)
    rules: list[str] = []
    states: list[ConcreteState] = [state] if log_states else []
    steps = 0
    while isinstance(state, Running):
        if steps >= fuel:
            return ConcreteRunResult(FUEL_EXHAUSTED, None, steps, tuple(rules),
                                     tuple(states) if log_states else None)
        info, state = concrete_step(state, program, names, restrict_to=goal_vars)
        steps += 1
        rules.append(info.rule)
        if log_states:
            states.append(state)
        if observer is not None:
            observer(info, state)
    kind = SUCCESS if isinstance(state, Success) else FAILED
    return ConcreteRunResult(kind, state.answer, steps, tuple(rules),
                             tuple(states) if log_states else None)
