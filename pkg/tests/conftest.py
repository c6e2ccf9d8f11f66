"""Shared fixtures and the independent brute-force unifier enumerator."""

from __future__ import annotations

import itertools

import pytest

from concolog import fixture, parse_goal
from concolog.terms import (
    Atom,
    Compound,
    Constant,
    Substitution,
    Variable,
    variables,
)


@pytest.fixture(scope="session")
def example21():
    return fixture("example21")


@pytest.fixture(scope="session")
def nat():
    return fixture("nat")


@pytest.fixture(scope="session")
def single_fact():
    return fixture("single_fact")


def goal(text: str) -> Atom:
    return parse_goal(text)


def labels(*names: str) -> frozenset[str]:
    return frozenset(names)


# ---------------------------------------------------------------------------
# Brute-force unifier enumeration over {a, b, f/1} with shared variables.
# Kept independent of the package's solver: used as the oracle side of the
# mgu and generality checks.

_ENUM_CONSTANTS = (Constant("a"), Constant("b"))


def _candidate_terms(max_depth: int, pool_used: int):
    """(term, new_pool_used) pairs; variables appear as canonical back-refs."""
    for c in _ENUM_CONSTANTS:
        yield c, pool_used
    for i in range(pool_used):
        yield Variable(f"_B{i + 1}"), pool_used
    yield Variable(f"_B{pool_used + 1}"), pool_used + 1
    if max_depth > 0:
        for inner, used in _candidate_terms(max_depth - 1, pool_used):
            yield Compound("f", (inner,)), used


def enumerate_substitutions(vars_, max_depth: int):
    """Every binding of vars_ to candidate terms, canonical up to renaming."""
    slots = sorted(vars_, key=lambda v: v.name)

    def rec(i: int, used: int, acc: tuple):
        if i == len(slots):
            yield Substitution(dict(zip(slots, acc)))
            return
        for term, used2 in _candidate_terms(max_depth, used):
            yield from rec(i + 1, used2, acc + (term,))

    yield from rec(0, 0, ())


def brute_force_unifiers(a: Atom, b: Atom, max_depth: int = 4):
    """All unifiers of two atoms found by exhaustive candidate bindings."""
    shared = variables(a) | variables(b)
    out = []
    for sub in enumerate_substitutions(shared, max_depth):
        if sub.apply(a) == sub.apply(b):
            out.append(sub)
    return out


def exhaustive_terms(max_depth: int, with_vars=("X", "Y")):
    """All terms over {a, b, f/1} plus the given variables, depth-staged."""
    level = list(_ENUM_CONSTANTS) + [Variable(v) for v in with_vars]
    every = list(level)
    for _ in range(max_depth):
        level = [Compound("f", (t,)) for t in level]
        every.extend(level)
    return every
