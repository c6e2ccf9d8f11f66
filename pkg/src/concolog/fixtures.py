"""Bundled example programs, a brute-force SLD oracle, and seeded generators.

The oracle searches the SLD tree directly (leftmost selection, clause
order, depth-capped) and is deliberately independent of the small-step
engine it cross-checks.  The random generators are plain seeded
``random.Random`` consumers so every suite run sees the same cases.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources

from .concrete import FAILED, SUCCESS
from .driver import TestSpec
from .parser import parse_program
from .solver import UnifProblem
from .terms import (
    Atom,
    Clause,
    Compound,
    Constant,
    NameSource,
    Program,
    Substitution,
    Term,
    Variable,
    mgu,
    variables,
)

UNKNOWN = "unknown"

_SPEC_PARAMS = {
    # fixture name -> (entry predicate, input positions, initial goal text, depth bound)
    "example21": (("p", 1), frozenset({1}), Atom("p", (Compound("f", (Constant("a"),)),)), 2),
    "nat": (("nat", 1), frozenset({1}), Atom("nat", (Constant("0"),)), 1),
    "single_fact": (("q", 1), frozenset({1}), Atom("q", (Constant("a"),)), 1),
}


def fixture_source(name: str) -> str:
    if name not in _SPEC_PARAMS:
        raise KeyError(f"unknown fixture {name!r}; have {sorted(_SPEC_PARAMS)}")
    return resources.files("concolog.data").joinpath(f"{name}.pl").read_text("utf-8")


def fixture(name: str) -> tuple[Program, TestSpec]:
    """A bundled program with its canonical test spec."""
    program = parse_program(fixture_source(name), origin=f"<fixture:{name}>")
    entry, inputs, goal, k = _SPEC_PARAMS[name]
    return program, TestSpec(program, entry, inputs, goal, depth_bound=k)


@dataclass(frozen=True)
class OracleResult:
    kind: str
    answer: Substitution | None = None


def brute_sld_first_answer(goal: Atom, program: Program, depth_cap: int,
                           node_budget: int = 100_000) -> OracleResult:
    """First answer by exhaustive SLD tree search, leftmost rule, clause order.

    ``depth_cap`` bounds resolution steps along one branch; ``node_budget``
    bounds the whole tree.  Returns UNKNOWN as soon as either bound
    truncates the search before a success was found in depth-first order;
    a success found earlier is sound.
    """
    names = NameSource(avoid=variables(goal))
    goal_vars = sorted(variables(goal), key=lambda v: v.name)
    nodes = [node_budget]

    def search(atoms: tuple[Atom, ...], answer: Substitution,
               budget: int) -> OracleResult:
        if not atoms:
            return OracleResult(SUCCESS, answer.restrict(goal_vars))
        if budget == 0 or nodes[0] <= 0:
            return OracleResult(UNKNOWN)
        nodes[0] -= 1
        selected, rest = atoms[0], atoms[1:]
        for clause in program.clauses:
            if clause.head.indicator != selected.indicator:
                continue
            renaming = Substitution({v: names.fresh()
                                     for v in sorted(variables(clause), key=lambda v: v.name)})
            head = renaming.apply(clause.head)
            sigma = mgu(selected, head)
            if sigma is None:
                continue
            body = tuple(sigma.apply(renaming.apply(b)) for b in clause.body)
            outcome = search(body + tuple(sigma.apply(a) for a in rest),
                             answer.compose(sigma), budget - 1)
            if outcome.kind != FAILED:
                return outcome
        return OracleResult(FAILED)

    return search((goal,), Substitution(), depth_cap)


# ---------------------------------------------------------------------------
# Seeded random generators over the fixed two-constant, one-functor signature.

GEN_CONSTANTS = ("a", "b")
GEN_FUNCTOR = ("f", 1)


def random_term(rng: random.Random, vars_pool: list[Variable],
                max_depth: int) -> Term:
    roll = rng.random()
    if max_depth == 0 or roll < 0.45:
        if vars_pool and rng.random() < 0.5:
            return rng.choice(vars_pool)
        return Constant(rng.choice(GEN_CONSTANTS))
    name, arity = GEN_FUNCTOR
    return Compound(name, tuple(random_term(rng, vars_pool, max_depth - 1)
                                for _ in range(arity)))


def random_program(rng: random.Random, max_clauses: int = 5) -> Program:
    """A tiny definite program over {a, b, f/1} with one or two predicates."""
    predicates = ["p", "q"][: rng.randint(1, 2)]
    clauses = []
    n_clauses = rng.randint(1, max_clauses)
    for i in range(n_clauses):
        pool = [Variable(f"X{i}_{j}") for j in range(2)]
        head_pred = rng.choice(predicates)
        head = Atom(head_pred, (random_term(rng, pool, 2),))
        body = tuple(Atom(rng.choice(predicates), (random_term(rng, pool, 1),))
                     for _ in range(rng.randint(0, 2)))
        clauses.append((head, body))
    return Program(tuple(Clause(f"l{i + 1}", head, body)
                         for i, (head, body) in enumerate(clauses)))


def random_goal(rng: random.Random, program: Program,
                ground: bool = False) -> Atom:
    pred, arity = program.predicates[rng.randrange(len(program.predicates))]
    pool = [] if ground else [Variable("GX"), Variable("GY")]
    return Atom(pred, tuple(random_term(rng, pool, 2) for _ in range(arity)))


def random_unif_problem(rng: random.Random, depth_bound: int = 2) -> UnifProblem:
    """Subject over distinct variables, positive/negative atoms over {a,b,f/1}."""
    arity = rng.randint(1, 2)
    subject = Atom("p", tuple(Variable(f"X{i}") for i in range(arity)))
    counter = [0]

    def fresh_atom() -> Atom:
        counter[0] += 1
        pool = [Variable(f"W{counter[0]}_{j}") for j in range(2)]
        return Atom("p", tuple(random_term(rng, pool, 2) for _ in range(arity)))

    pos = tuple(fresh_atom() for _ in range(rng.randint(0, 2)))
    neg = tuple(fresh_atom() for _ in range(rng.randint(0, 3)))
    ground_vars = frozenset(v for v in subject.args if rng.random() < 0.6)
    return UnifProblem(subject, pos, neg, ground_vars, depth_bound)


def random_test_spec(rng: random.Random, fuel: int = 120,
                     max_alternatives: int = 6) -> TestSpec:
    program = random_program(rng, max_clauses=4)
    goal = random_goal(rng, program, ground=True)
    return TestSpec(program, goal.indicator, frozenset({1}), goal,
                    depth_bound=rng.randint(1, 2),
                    max_alternatives=max_alternatives, fuel=fuel)
