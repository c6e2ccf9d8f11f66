"""First-answer engine against the worked derivation and the SLD oracle."""

import random

import pytest

from concolog.concrete import (
    FAIL_ATOM,
    FAILED,
    FUEL_EXHAUSTED,
    LabeledGoal,
    Running,
    SUCCESS,
    clauses_for,
    concrete_run,
    concrete_step,
    rule_for,
)
from concolog.fixtures import (
    UNKNOWN,
    brute_sld_first_answer,
    random_goal,
    random_program,
)
from concolog.parser import parse_program
from concolog.terms import (
    Constant,
    NameSource,
    Substitution,
    Variable,
    substitutions_equivalent,
    variables,
)
from conftest import goal


def test_clauses_for_examples(example21):
    program, _ = example21
    names = NameSource()
    only = clauses_for(goal("p(f(X))"), program, names)
    assert [c.label for c in only] == ["l3"]
    both = clauses_for(goal("r(X)"), program, names)
    assert [c.label for c in both] == ["l6", "l7"]
    assert clauses_for(goal("p(g(X))"), program, names) == ()


def test_clauses_for_renames_apart(example21):
    program, _ = example21
    clause = clauses_for(goal("p(f(X))"), program, NameSource())[0]
    assert not variables(clause) & {Variable("X")}
    assert not variables(clause) & variables(program.clauses[2])


def test_golden_first_answer_run(example21):
    program, _ = example21
    result = concrete_run(goal("p(f(X))"), program)
    assert result.kind == SUCCESS
    assert result.answer == Substitution({Variable("X"): Constant("a")})
    assert result.rules == ("choice", "unfold", "choice", "unfold", "success")


def test_ground_fact_succeeds_with_empty_answer(example21):
    program, _ = example21
    result = concrete_run(goal("q(a)"), program)
    assert result.kind == SUCCESS and result.answer == Substitution()


def test_no_matching_head_fails(example21):
    program, _ = example21
    # independent oracle first: exhaustive SLD search finds no derivation
    assert brute_sld_first_answer(goal("p(g(a))"), program, 20).kind == FAILED
    result = concrete_run(goal("p(g(a))"), program)
    assert result.kind == FAILED and result.answer == Substitution()
    assert result.rules == ("choice_fail", "failure")


def test_backtracking_past_a_failing_clause():
    program = parse_program("p(X) :- q(X), r(X).\nq(a).\nq(b).\nr(b).")
    result = concrete_run(goal("p(X)"), program)
    assert result.kind == SUCCESS
    assert result.answer == Substitution({Variable("X"): Constant("b")})
    assert "backtrack" in result.rules


def test_failure_rule_on_singleton_stack(example21):
    program, _ = example21
    state = Running((LabeledGoal((FAIL_ATOM,), Substitution()),))
    info, nxt = concrete_step(state, program, NameSource())
    assert info.rule == "failure"
    assert nxt.answer == Substitution()


def test_rule_selection_is_deterministic(example21):
    program, _ = example21
    state = Running((LabeledGoal((goal("p(f(X))"),), Substitution()),))
    rule, _ = rule_for(state, program, NameSource())
    assert rule == "choice"


def test_answers_restricted_to_goal_variables(example21):
    program, _ = example21
    logged = concrete_run(goal("p(f(X))"), program, log_states=True)
    goal_vars = {Variable("X")}
    for state in logged.states:
        entries = state.stack if isinstance(state, Running) else ()
        for entry in entries:
            assert entry.answer.domain() <= goal_vars


def test_fuel_exhaustion_and_monotonicity():
    program = parse_program("loop(X) :- loop(X).")
    short = concrete_run(goal("loop(a)"), program, fuel=50)
    assert short.kind == FUEL_EXHAUSTED and short.steps == 50
    done = concrete_run(goal("p(f(X))"), parse_program("p(f(a))."), fuel=3)
    for fuel in (3, 4, 10, 1000):
        again = concrete_run(goal("p(f(X))"), parse_program("p(f(a))."), fuel=fuel)
        assert (again.kind, again.answer) == (done.kind, done.answer)


def test_success_is_terminal_first_answer_only():
    program = parse_program("p(a).\np(b).")
    result = concrete_run(goal("p(X)"), program)
    assert result.kind == SUCCESS
    assert result.answer == Substitution({Variable("X"): Constant("a")})


def test_observer_sees_every_step(example21):
    program, _ = example21
    seen = []
    concrete_run(goal("p(f(X))"), program,
                 observer=lambda info, state: seen.append(info.rule))
    assert seen == ["choice", "unfold", "choice", "unfold", "success"]


def test_brute_oracle_unknown_on_zero_cap(example21):
    program, _ = example21
    assert brute_sld_first_answer(goal("q(a)"), program, 0).kind == UNKNOWN


def test_brute_oracle_golden(example21):
    program, _ = example21
    result = brute_sld_first_answer(goal("p(f(X))"), program, 20)
    assert result.kind == SUCCESS
    assert result.answer == Substitution({Variable("X"): Constant("a")})


def test_engine_agrees_with_sld_oracle_on_random_programs():
    rng = random.Random(20250811)
    checked = 0
    for _ in range(500):
        program = random_program(rng)
        g = random_goal(rng, program)
        oracle = brute_sld_first_answer(g, program, 16, node_budget=20_000)
        if oracle.kind == UNKNOWN:
            continue
        run = concrete_run(g, program, fuel=4000)
        assert run.kind == oracle.kind, f"{g} on\n{program}"
        if run.kind == SUCCESS:
            assert substitutions_equivalent(run.answer, oracle.answer)
        checked += 1
    assert checked > 300
