"""Lockstep concrete+symbolic execution with choice labels and traces.

The symbolic side mirrors the concrete side's control path: at a choice
step both sides are replicated with the clauses matching the *concrete*
selected atom, so the symbolic goals stay aligned, one per concrete goal,
and remain more general throughout.  Each choice step emits a label pairing
the concretely matched clause labels with the symbolically matched ones;
the concrete halves of those labels form the execution trace, and a
per-choice snapshot records what the test driver needs to branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .concrete import (
    ConcreteState,
    DEFAULT_FUEL,
    FAIL_ATOM,
    FAILED,
    FUEL_EXHAUSTED,
    Failed,
    LabeledGoal,
    Running,
    StuckStateError,
    SUCCESS,
    Success,
    UnknownPredicateError,
    clauses_for,
    unfold_goal,
)
from .terms import (
    Atom,
    EMPTY_SUBSTITUTION,
    NameSource,
    Program,
    Substitution,
    Variable,
    match_into,
    mgu,
    more_general,
    rename_apart,
    variables,
)

Trace = tuple[frozenset[str], ...]


class InvariantViolationError(Exception):
    """The lockstep alignment broke: an engine bug detector."""


@dataclass(frozen=True)
class StepLabel:
    """Either the silent label or a choice label pairing matched-clause sets."""

    conc: frozenset[str] | None = None
    sym: frozenset[str] | None = None

    @property
    def is_choice(self) -> bool:
        return self.conc is not None

    def __str__(self) -> str:
        if not self.is_choice:
            return "<>"
        fmt = lambda s: "{" + ",".join(sorted(s)) + "}"
        return f"c({fmt(self.conc)},{fmt(self.sym)})"


DIAMOND = StepLabel()


def choice_label(conc: frozenset[str], sym: frozenset[str]) -> StepLabel:
    if not conc <= sym:
        raise InvariantViolationError(
            f"concrete labels {sorted(conc)} not a subset of symbolic {sorted(sym)}")
    return StepLabel(conc, sym)


@dataclass(frozen=True)
class ConcolicRunning:
    concrete: tuple[LabeledGoal, ...]
    symbolic: tuple[LabeledGoal, ...]


@dataclass(frozen=True)
class ConcolicSuccess:
    concrete_answer: Substitution
    symbolic_answer: Substitution


@dataclass(frozen=True)
class ConcolicFailed:
    concrete_answer: Substitution
    symbolic_answer: Substitution


ConcolicState = ConcolicRunning | ConcolicSuccess | ConcolicFailed


@dataclass(frozen=True)
class ChoiceRecord:
    """Snapshot of one choice point, taken at the pre-step state."""

    prefix: Trace
    taken: frozenset[str]
    symbolic_matched: frozenset[str]
    symbolic_selected_atom: Atom
    symbolic_answer: Substitution

    def __post_init__(self) -> None:
        if not self.taken <= self.symbolic_matched:
            raise InvariantViolationError(
                f"taken {sorted(self.taken)} exceeds matched {sorted(self.symbolic_matched)}")


@dataclass(frozen=True)
class ConcolicRunResult:
    kind: str
    concrete_answer: Substitution | None
    symbolic_answer: Substitution | None
    trace: Trace
    choices: tuple[ChoiceRecord, ...]
    labels: tuple[StepLabel, ...]
    rules: tuple[str, ...]
    steps: int
    goal: Atom
    symbolic_goal: Atom
    states: tuple[ConcolicState, ...] | None = None


ConcolicObserver = Callable[[StepLabel, str, ConcolicState], None]


def _goal_more_general(general: tuple[Atom, ...], specific: tuple[Atom, ...]) -> bool:
    """One binding map must instantiate the whole goal sequence at once."""
    if len(general) != len(specific):
        return False
    bound: dict = {}
    for g, s in zip(general, specific):
        if g.indicator != s.indicator:
            return False
        if not match_into(bound, zip(g.args, s.args)):
            return False
    return True


def _check_pair(conc: LabeledGoal, sym: LabeledGoal) -> None:
    if not _goal_more_general(sym.goal, conc.goal):
        raise InvariantViolationError(
            f"symbolic goal {sym} is not more general than concrete {conc}")
    if conc.clause != sym.clause:
        raise InvariantViolationError(
            f"clause annotations differ: {conc.clause} vs {sym.clause}")


def _check_head_answers(state: ConcolicRunning, concrete_goal: Atom,
                        symbolic_goal: Atom) -> None:
    sym_head = state.symbolic[0].answer.apply(symbolic_goal)
    conc_head = state.concrete[0].answer.apply(concrete_goal)
    if not more_general(sym_head, conc_head):
        raise InvariantViolationError(
            f"answer invariant broke: {sym_head} not more general than {conc_head}")


def check_invariant(state: ConcolicState, concrete_goal: Atom, symbolic_goal: Atom) -> None:
    """Full check of the lockstep alignment invariant on one state.

    Equal stack depths, every symbolic goal more general than its concrete
    partner, identical clause annotations, and the instantiated symbolic
    head answer more general than the concrete one.  Terminal states carry
    no stacks to check.
    """
    if isinstance(state, (ConcolicSuccess, ConcolicFailed)):
        return
    if len(state.concrete) != len(state.symbolic):
        raise InvariantViolationError(
            f"stack depths differ: {len(state.concrete)} vs {len(state.symbolic)}")
    for conc, sym in zip(state.concrete, state.symbolic):
        _check_pair(conc, sym)
    _check_head_answers(state, concrete_goal, symbolic_goal)


def check_step_invariant(state: ConcolicState, concrete_goal: Atom,
                         symbolic_goal: Atom) -> None:
    """Incremental per-step check, equivalent to the full one by induction.

    A step only creates or rewrites the head pair (choice replicas differ
    from the head only in their shared clause annotation), so verifying the
    head pair and the stack depths at every step maintains the invariant
    for the whole stack.
    """
    if isinstance(state, (ConcolicSuccess, ConcolicFailed)):
        return
    if len(state.concrete) != len(state.symbolic):
        raise InvariantViolationError(
            f"stack depths differ: {len(state.concrete)} vs {len(state.symbolic)}")
    _check_pair(state.concrete[0], state.symbolic[0])
    _check_head_answers(state, concrete_goal, symbolic_goal)


def _symbolic_matched_labels(atom: Atom, program: Program) -> frozenset[str]:
    # Only the label set is needed, so rename with a throwaway source to
    # keep the session counter in sync with a plain concrete run.
    scratch = NameSource(avoid=variables(atom))
    labels = set()
    for clause in program.clauses:
        if clause.head.indicator != atom.indicator:
            continue
        if mgu(atom, rename_apart(clause, scratch).head) is not None:
            labels.add(clause.label)
    return frozenset(labels)


def concolic_step(state: ConcolicRunning, program: Program, names: NameSource,
                  restrict_conc: frozenset[Variable] | None = None,
                  restrict_sym: frozenset[Variable] | None = None,
                  ) -> tuple[StepLabel, str, ConcolicState]:
    """Apply the unique rule; the concrete side dictates which one fires."""
    conc_head, *conc_rest = state.concrete
    sym_head, *sym_rest = state.symbolic

    def aligned(predicate: bool, why: str) -> None:
        if not predicate:
            raise InvariantViolationError(f"symbolic side out of step: {why}")

    if conc_head.goal == ():
        aligned(sym_head.goal == (), "expected symbolic true goal")
        return DIAMOND, "success", ConcolicSuccess(conc_head.answer, sym_head.answer)
    if conc_head.goal[0] == FAIL_ATOM:
        aligned(sym_head.goal and sym_head.goal[0] == FAIL_ATOM,
                "expected symbolic fail marker")
        if len(state.concrete) == 1:
            return DIAMOND, "failure", ConcolicFailed(conc_head.answer, sym_head.answer)
        return DIAMOND, "backtrack", ConcolicRunning(tuple(conc_rest), tuple(sym_rest))
    if conc_head.clause is not None:
        aligned(sym_head.clause == conc_head.clause, "clause annotations differ")
        new_conc = unfold_goal(conc_head, restrict_conc)
        new_sym = unfold_goal(sym_head, restrict_sym)
        return DIAMOND, "unfold", ConcolicRunning((new_conc,) + tuple(conc_rest),
                                                  (new_sym,) + tuple(sym_rest))

    selected = conc_head.goal[0]
    sym_selected = sym_head.goal[0]
    matching = clauses_for(selected, program, names)
    sym_labels = _symbolic_matched_labels(sym_selected, program)
    if matching:
        label = choice_label(frozenset(c.label for c in matching), sym_labels)
        conc_copies = tuple(LabeledGoal(conc_head.goal, conc_head.answer, c) for c in matching)
        sym_copies = tuple(LabeledGoal(sym_head.goal, sym_head.answer, c) for c in matching)
        return label, "choice", ConcolicRunning(conc_copies + tuple(conc_rest),
                                                sym_copies + tuple(sym_rest))
    label = choice_label(frozenset(), sym_labels)
    conc_failed = LabeledGoal((FAIL_ATOM,) + conc_head.goal[1:], conc_head.answer)
    sym_failed = LabeledGoal((FAIL_ATOM,) + sym_head.goal[1:], sym_head.answer)
    return label, "choice_fail", ConcolicRunning((conc_failed,) + tuple(conc_rest),
                                                 (sym_failed,) + tuple(sym_rest))


def concolic_run(goal: Atom, program: Program, fuel: int = DEFAULT_FUEL,
                 names: NameSource | None = None,
                 observer: ConcolicObserver | None = None,
                 log_states: bool = False,
                 check_invariants: bool = True) -> ConcolicRunResult:
    """Run goal and its fresh-variable generalization in lockstep.

    The symbolic initial atom reuses the goal's predicate over fresh
    variables; reserved solver variables never enter the engine.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    if goal.indicator not in program.predicates:
        raise UnknownPredicateError(
            f"{goal.predicate}/{goal.arity} does not occur in the program")
    if names is None:
        names = NameSource(avoid=variables(goal))
    symbolic_goal = Atom(goal.predicate, tuple(names.fresh() for _ in goal.args))
    conc_vars = variables(goal)
    sym_vars = variables(symbolic_goal)
    state: ConcolicState = ConcolicRunning(
        (LabeledGoal((goal,), EMPTY_SUBSTITUTION),),
        (LabeledGoal((symbolic_goal,), EMPTY_SUBSTITUTION),))
    labels: list[StepLabel] = []
    rules: list[str] = []
    choices: list[ChoiceRecord] = []
    trace: list[frozenset[str]] = []
    states: list[ConcolicState] = [state] if log_states else []
    steps = 0
    while isinstance(state, ConcolicRunning):
        if steps >= fuel:
            return ConcolicRunResult(FUEL_EXHAUSTED, None, None, tuple(trace),
                                     tuple(choices), tuple(labels), tuple(rules), steps,
                                     goal, symbolic_goal,
                                     tuple(states) if log_states else None)
        pre = state
        label, rule, state = concolic_step(state, program, names,
                                           restrict_conc=conc_vars,
                                           restrict_sym=sym_vars)
        steps += 1
        labels.append(label)
        rules.append(rule)
        if label.is_choice:
            sym_head = pre.symbolic[0]
            choices.append(ChoiceRecord(tuple(trace), label.conc, label.sym,
                                        sym_head.goal[0], sym_head.answer))
            trace.append(label.conc)
        if check_invariants:
            check_step_invariant(state, goal, symbolic_goal)
        if log_states:
            states.append(state)
        if observer is not None:
            observer(label, rule, state)
    kind = SUCCESS if isinstance(state, ConcolicSuccess) else FAILED
    return ConcolicRunResult(kind, state.concrete_answer, state.symbolic_answer,
                             tuple(trace), tuple(choices), tuple(labels), tuple(rules),
                             steps, goal, symbolic_goal,
                             tuple(states) if log_states else None)


def project_concrete(result: ConcolicRunResult) -> tuple[ConcreteState, ...]:
    """The concrete components of a state-logged run, rule for rule."""
    if result.states is None:
        raise ValueError("run was not executed with log_states=True")
    projected: list[ConcreteState] = []
    for state in result.states:
        if isinstance(state, ConcolicRunning):
            projected.append(Running(state.concrete))
        elif isinstance(state, ConcolicSuccess):
            projected.append(Success(state.concrete_answer))
        else:
            projected.append(Failed(state.concrete_answer))
    return tuple(projected)
