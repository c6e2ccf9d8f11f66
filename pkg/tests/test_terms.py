"""Term language, unification and disagreement-pair machinery."""

import itertools

import pytest
from hypothesis import given, strategies as st

from concolog.terms import (
    Atom,
    Clause,
    Compound,
    Constant,
    NameSource,
    Program,
    Substitution,
    UNIF_NS,
    Variable,
    compose,
    depth,
    disagreement_pairs,
    is_ground,
    mgu,
    more_general,
    rename_apart,
    substitutions_equivalent,
    variables,
    variant,
)
from conftest import brute_force_unifiers, goal

X, Y, Z = Variable("X"), Variable("Y"), Variable("Z")
a, b = Constant("a"), Constant("b")


def f(t):
    return Compound("f", (t,))


# --- mgu -------------------------------------------------------------------

def test_mgu_binds_variable_to_constant():
    assert mgu(goal("r(X)"), goal("r(a)")) == Substitution({X: a})


def test_mgu_identity_on_equal_atoms():
    assert mgu(goal("p(X)"), goal("p(X)")) == Substitution()


def test_mgu_occurs_check_fails():
    assert mgu(goal("p(Y,Y)"), goal("p(X,f(X))")) is None


def test_mgu_mismatched_predicates_fail():
    assert mgu(goal("p(a)"), goal("q(a)")) is None
    assert mgu(goal("p(a)"), goal("p(a,b)")) is None


def test_mgu_keeps_left_variables_on_var_var_pairs():
    sigma = mgu(goal("p(f(X))"), goal("p(f(Y))"))
    assert sigma == Substitution({Y: X})


terms_st = st.recursive(
    st.sampled_from([a, b, X, Y]),
    lambda kids: st.builds(f, kids),
    max_leaves=3,
)
atoms_st = st.one_of(
    st.builds(lambda t: Atom("p", (t,)), terms_st),
    st.builds(lambda s, t: Atom("p", (s, t)), terms_st, terms_st),
)


@given(atoms_st, atoms_st)
def test_mgu_soundness_and_idempotency(left, right):
    sigma = mgu(left, right)
    if sigma is not None:
        assert sigma.apply(left) == sigma.apply(right)
        assert sigma.is_idempotent()


@given(atoms_st, atoms_st)
def test_mgu_failure_is_symmetric(left, right):
    assert (mgu(left, right) is None) == (mgu(right, left) is None)


@given(atoms_st, atoms_st)
def test_mgu_agrees_with_brute_force_enumeration(left, right):
    sigma = mgu(left, right)
    found = brute_force_unifiers(left, right, max_depth=3)
    if sigma is None:
        assert not found
    else:
        assert found
        for tau in found:
            assert more_general(sigma.apply(left), tau.apply(left))


# --- apply / compose --------------------------------------------------------

def test_apply_examples():
    assert Substitution({X: a}).apply(goal("r(X)")) == goal("r(a)")
    assert Substitution().apply(goal("p(f(X))")) == goal("p(f(X))")
    n = Variable("N")
    assert Substitution({n: f(Y)}).apply(goal("p(N)")) == goal("p(f(Y))")


def test_compose_examples():
    assert compose(Substitution({X: Y}), Substitution({Y: a})) == \
        Substitution({X: a, Y: a})
    assert compose(Substitution(), Substitution({Y: a})) == Substitution({Y: a})
    n = Variable("N")
    assert compose(Substitution({n: f(Y)}), Substitution({Y: a})) == \
        Substitution({n: f(a), Y: a})


@given(terms_st, st.dictionaries(st.sampled_from([X, Y]), terms_st, max_size=2),
       st.dictionaries(st.sampled_from([X, Y]), terms_st, max_size=2))
def test_compose_is_sequential_application(t, m1, m2):
    s1, s2 = Substitution(m1), Substitution(m2)
    assert compose(s1, s2).apply(t) == s2.apply(s1.apply(t))


def test_substitution_drops_identity_bindings():
    assert Substitution({X: X, Y: a}) == Substitution({Y: a})


# --- rename_apart -----------------------------------------------------------

def test_rename_apart_is_a_fresh_variant():
    clause = Clause("l1", goal("p(f(X))"), (goal("r(X)"),))
    renamed = rename_apart(clause, NameSource())
    assert renamed.label == "l1"
    assert variant(renamed.head, clause.head)
    assert not variables(renamed) & variables(clause)


def test_rename_apart_ground_clause_unchanged():
    clause = Clause("l1", goal("q(a)"))
    assert rename_apart(clause, NameSource()) == clause


def test_rename_apart_twice_shares_nothing():
    names = NameSource()
    clause = Clause("l1", goal("p(f(X))"), (goal("r(X)"),))
    first = rename_apart(clause, names)
    second = rename_apart(clause, names)
    assert not variables(first) & variables(second)


def test_name_source_skips_avoided_names():
    names = NameSource(avoid=[Variable("_G1"), Variable("_G2")])
    assert names.fresh().name == "_G3"


# --- depth / variables / groundness ----------------------------------------

def test_depth_examples():
    assert depth(X) == 0
    assert depth(Compound("s", (Constant("0"),))) == 1
    assert depth(Compound("f", (Compound("g", (a,)), b))) == 2


@given(terms_st, st.dictionaries(st.sampled_from([X, Y]), terms_st, max_size=2))
def test_depth_never_shrinks_under_substitution(t, mapping):
    assert depth(Substitution(mapping).apply(t)) >= depth(t)


def test_variables_and_groundness():
    assert variables(goal("p(f(X),a)")) == {X}
    assert is_ground(goal("nat(s(0))"))
    assert variables(Substitution({X: f(Y)})) == {X, Y}


# --- disagreement pairs ------------------------------------------------------

def test_disagreement_pairs_paper_example():
    left = Atom("f", (X, Compound("g", (b,))))
    right = Atom("f", (Compound("g", (a,)), Compound("g", (Compound("h", (Y,)),))))
    pairs = disagreement_pairs([left, right])
    assert {p.value for p in pairs} == {(X, Compound("g", (a,))), (b, Compound("h", (Y,)))}
    assert {p.position for p in pairs} == {(1,), (2, 1)}


def test_disagreement_pairs_identical_atoms_empty():
    assert disagreement_pairs([goal("p(a)"), goal("p(a)")]) == ()


def test_reserved_variable_pairs_are_never_simple():
    u = Variable("_U1", UNIF_NS)
    pairs = disagreement_pairs([Atom("p", (u,)), Atom("p", (a,))])
    assert len(pairs) == 1 and not pairs[0].simple


def test_occurring_variable_is_not_simple():
    pairs = disagreement_pairs([Atom("p", (X,)), Atom("p", (f(X),))])
    assert len(pairs) == 1 and not pairs[0].simple


def test_disagreement_pairs_rejects_mixed_predicates():
    with pytest.raises(ValueError):
        disagreement_pairs([goal("p(a)"), goal("q(a)")])


# --- more_general / variants --------------------------------------------------

def test_more_general_examples():
    n = Variable("N")
    assert more_general(Atom("p", (n,)), goal("p(f(X))"))
    assert not more_general(goal("p(a)"), goal("p(X)"))
    assert more_general(goal("p(X)"), goal("p(X)"))


def test_more_general_requires_consistent_bindings():
    assert not more_general(goal("p(X,X)"), goal("p(a,b)"))
    assert more_general(goal("p(X,X)"), goal("p(a,a)"))


def test_substitutions_equivalent_mod_renaming():
    u1, u2 = Variable("_U1", UNIF_NS), Variable("_U9", UNIF_NS)
    assert substitutions_equivalent(Substitution({X: a, Y: u1}),
                                    Substitution({X: a, Y: u2}))
    assert not substitutions_equivalent(Substitution({X: u1, Y: u1}),
                                        Substitution({X: u1, Y: u2}))


# --- program signature --------------------------------------------------------

def test_program_signature_order_and_labels(example21):
    program, _ = example21
    assert [c.label for c in program.clauses] == [f"l{i}" for i in range(1, 8)]
    assert program.constants == ("a", "b", "c")
    assert program.functors == (("s", 1), ("f", 1))
    assert set(program.predicates) == {("p", 1), ("q", 1), ("r", 1)}


def test_duplicate_labels_rejected():
    c1 = Clause("l1", goal("p(a)"))
    with pytest.raises(ValueError):
        Program((c1, c1))
