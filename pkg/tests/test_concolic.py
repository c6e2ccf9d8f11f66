"""Lockstep engine: worked example, alignment invariant, conservativity."""

import random

import pytest

from concolog.concolic import (
    InvariantViolationError,
    check_invariant,
    choice_label,
    concolic_run,
    project_concrete,
)
from concolog.concrete import (
    FAILED,
    FUEL_EXHAUSTED,
    Failed,
    Running,
    SUCCESS,
    Success,
    UnknownPredicateError,
    concrete_run,
)
from concolog.fixtures import random_goal, random_program
from concolog.parser import parse_program
from concolog.terms import (
    Compound,
    Constant,
    Substitution,
    Variable,
    substitutions_equivalent,
    variables,
)
from conftest import goal, labels


def test_golden_concolic_run(example21):
    program, _ = example21
    run = concolic_run(goal("p(f(X))"), program)
    assert run.kind == SUCCESS
    assert run.trace == (labels("l3"), labels("l6", "l7"))
    assert run.concrete_answer == Substitution({Variable("X"): Constant("a")})
    # symbolic answer is {N/f(a)} for the fresh initial variable N
    (n,) = run.symbolic_goal.args
    assert run.symbolic_answer == Substitution({n: Compound("f", (Constant("a"),))})


def test_golden_choice_labels(example21):
    program, _ = example21
    run = concolic_run(goal("p(f(X))"), program)
    chosen = [l for l in run.labels if l.is_choice]
    assert (chosen[0].conc, chosen[0].sym) == (labels("l3"), labels("l1", "l2", "l3"))
    assert (chosen[1].conc, chosen[1].sym) == (labels("l6", "l7"), labels("l6", "l7"))
    diamonds = [l for l in run.labels if not l.is_choice]
    assert len(diamonds) == len(run.labels) - 2


def test_choice_records_capture_prestep_snapshot(example21):
    program, _ = example21
    run = concolic_run(goal("p(f(X))"), program)
    first, second = run.choices
    assert first.prefix == ()
    assert first.symbolic_selected_atom == run.symbolic_goal
    assert first.symbolic_answer == Substitution()
    assert second.prefix == (labels("l3"),)
    assert second.symbolic_selected_atom.predicate == "r"
    (n,) = run.symbolic_goal.args
    (y,) = second.symbolic_selected_atom.args
    assert second.symbolic_answer == Substitution({n: Compound("f", (y,))})


def test_nat_traces(nat):
    program, _ = nat
    assert concolic_run(goal("nat(0)"), program).trace == (labels("l1"),)
    run = concolic_run(goal("nat(1)"), program)
    assert run.kind == FAILED
    assert run.trace == (frozenset(),)


def test_unknown_predicate_is_an_error(nat):
    program, _ = nat
    with pytest.raises(UnknownPredicateError):
        concolic_run(goal("even(0)"), program)
    with pytest.raises(UnknownPredicateError):
        concolic_run(goal("nat(0,0)"), program)


def test_label_subset_invariant_enforced():
    with pytest.raises(InvariantViolationError):
        choice_label(labels("l1"), frozenset())


def test_trace_terminal_consistency(example21, nat):
    for program, spec in (example21, nat):
        g = spec.initial_goal
        run = concolic_run(g, program)
        if run.kind == SUCCESS:
            assert run.trace[-1]
        chosen = [l for l in run.labels if l.is_choice]
        assert len(run.trace) == len(chosen)
        for label in chosen:
            assert label.conc <= label.sym


def test_projection_matches_standalone_run(example21):
    program, _ = example21
    run = concolic_run(goal("p(f(X))"), program, log_states=True)
    plain = concrete_run(goal("p(f(X))"), program, log_states=True)
    assert run.rules == plain.rules
    projected = project_concrete(run)
    assert len(projected) == len(plain.states)
    assert isinstance(projected[-1], Success)
    assert projected[-1].answer == plain.states[-1].answer


def test_projection_requires_state_log(example21):
    program, _ = example21
    run = concolic_run(goal("p(f(X))"), program)
    with pytest.raises(ValueError):
        project_concrete(run)


def _conservativity_case(program, g, fuel=250):
    run = concolic_run(g, program, fuel=fuel, log_states=True)
    plain = concrete_run(g, program, fuel=fuel)
    assert run.rules == plain.rules
    assert run.kind == plain.kind
    if run.kind != FUEL_EXHAUSTED:
        assert substitutions_equivalent(run.concrete_answer, plain.answer)
        terminal = project_concrete(run)[-1]
        assert isinstance(terminal, Success if run.kind == SUCCESS else Failed)


def test_conservativity_on_random_goals():
    rng = random.Random(20250812)
    for _ in range(100):
        program = random_program(rng)
        g = random_goal(rng, program)
        if g.indicator not in program.predicates:
            continue
        _conservativity_case(program, g)


def test_invariant_checked_on_random_runs():
    # invariant checking is on by default; zero violations means no raise
    rng = random.Random(20250813)
    for _ in range(100):
        program = random_program(rng)
        g = random_goal(rng, program)
        if g.indicator not in program.predicates:
            continue
        concolic_run(g, program, fuel=250)


def test_full_invariant_on_every_logged_state(example21, nat):
    # the complete (whole-stack) check on every state of the fixture runs
    cases = [(example21[0], ["p(f(X))", "p(s(X))", "p(a)"]),
             (nat[0], ["nat(0)", "nat(s(s(0)))", "nat(1)"])]
    for program, texts in cases:
        for text in texts:
            run = concolic_run(goal(text), program, log_states=True)
            for state in run.states:
                check_invariant(state, run.goal, run.symbolic_goal)


def test_run_answers_are_idempotent():
    rng = random.Random(20250822)
    for _ in range(60):
        program = random_program(rng)
        g = random_goal(rng, program)
        if g.indicator not in program.predicates:
            continue
        run = concolic_run(g, program, fuel=150)
        if run.kind != FUEL_EXHAUSTED:
            assert run.concrete_answer.is_idempotent()
            assert run.symbolic_answer.is_idempotent()


def test_fuel_exhausted_keeps_partial_trace():
    program = parse_program("loop(X) :- loop(X).")
    run = concolic_run(goal("loop(a)"), program, fuel=21)
    assert run.kind == FUEL_EXHAUSTED
    assert run.trace and all(s == labels("l1") for s in run.trace)
    assert run.choices[0].taken == labels("l1")
