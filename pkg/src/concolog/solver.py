"""Positive/negative unifiability with groundness constraints.

Given a subject atom, a set of atoms it must stay unifiable with, a set it
must not unify with, and variables that must end up ground, the solver
first computes *maximal unifying substitutions*: bindings of the subject
that are as instantiated as possible while still unifying with every
positive atom.  Reserved-namespace variables in the result mark positions
where any further binding would break some positive unification.  A
bounded generate-and-test pass then grounds the required variables and
screens the negative atoms.

A brute-force oracle that enumerates candidate bindings directly is kept
alongside as an independent cross-check for tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .terms import (
    Atom,
    Clause,
    Compound,
    Constant,
    NameSource,
    PROGRAM_NS,
    Program,
    Substitution,
    Term,
    UNIF_NS,
    Variable,
    canonical,
    depth,
    disagreement_pairs,
    has_unif_variables,
    is_ground,
    match,
    more_general,
    occurs_in,
    rename_apart,
    term_to_text,
    unifiable,
    variable_sort_key,
    variables,
)


class SolverInternalError(Exception):
    """A solver invariant broke; indicates a bug, not unsolvable input."""


class UnknownLabelError(Exception):
    pass


@dataclass(frozen=True)
class SolverSignature:
    """Grounding vocabulary: program symbols plus one out-of-program constant.

    The reserved constant realizes "matches no clause" branches; it sorts
    after every term built from program symbols during the solver's search.
    """

    constants: tuple[str, ...]
    functors: tuple[tuple[str, int], ...]
    fresh_constant: str

    def __post_init__(self) -> None:
        if self.fresh_constant in self.constants:
            raise ValueError("the reserved constant must not occur in the program")

    @classmethod
    def from_program(cls, program: Program) -> "SolverSignature":
        fresh = "fresh"
        n = 0
        while fresh in program.constants:
            n += 1
            fresh = f"fresh{n}"
        return cls(program.constants, program.functors, fresh)

    @classmethod
    def from_atoms(cls, atoms) -> "SolverSignature":
        constants: list[str] = []
        functors: list[tuple[str, int]] = []

        def walk(t: Term) -> None:
            if isinstance(t, Constant) and t.symbol not in constants:
                constants.append(t.symbol)
            elif isinstance(t, Compound):
                key = (t.functor, len(t.args))
                if key not in functors:
                    functors.append(key)
                for a in t.args:
                    walk(a)

        for atom in atoms:
            for a in atom.args:
                walk(a)
        fresh = "fresh"
        n = 0
        while fresh in constants:
            n += 1
            fresh = f"fresh{n}"
        return cls(tuple(constants), tuple(functors), fresh)


@dataclass(frozen=True)
class UnifProblem:
    """One solve request: subject, positive/negative atoms, groundness set."""

    subject: Atom
    pos: tuple[Atom, ...]
    neg: tuple[Atom, ...]
    ground_vars: frozenset[Variable] = frozenset()
    depth_bound: int = 2

    def validate(self) -> None:
        atoms = (self.subject,) + self.pos + self.neg
        if any(has_unif_variables(a) for a in atoms):
            raise ValueError("problem atoms must not contain reserved solver variables")
        var_sets = [variables(a) for a in atoms]
        for i, j in itertools.combinations(range(len(atoms)), 2):
            if var_sets[i] & var_sets[j]:
                raise ValueError(f"atoms {atoms[i]} and {atoms[j]} are not renamed apart")
        for other in self.pos + self.neg:
            if not unifiable(self.subject, other):
                raise ValueError(f"{other} does not unify with the subject {self.subject}")


def _program_vars(obj) -> set[Variable]:
    return {v for v in variables(obj) if v.namespace == PROGRAM_NS}


def _canon_u(obj):
    """Canonical renaming of reserved-namespace variables only."""
    return canonical(obj, rigid=_program_vars(obj))


def _dedup_atoms(atoms) -> tuple[Atom, ...]:
    out = []
    for a in atoms:
        if a not in out:
            out.append(a)
    return tuple(out)


def _set_at(term_or_atom, position: tuple[int, ...], replacement: Term):
    if not position:
        return replacement
    head, *rest = position
    if isinstance(term_or_atom, Atom):
        args = list(term_or_atom.args)
        args[head - 1] = _set_at(args[head - 1], tuple(rest), replacement)
        return Atom(term_or_atom.predicate, tuple(args))
    assert isinstance(term_or_atom, Compound)
    args = list(term_or_atom.args)
    args[head - 1] = _set_at(args[head - 1], tuple(rest), replacement)
    return Compound(term_or_atom.functor, tuple(args))


def _symbol_count(obj) -> int:
    if isinstance(obj, (Variable, Constant)):
        return 1
    if isinstance(obj, Compound):
        return 1 + sum(_symbol_count(a) for a in obj.args)
    assert isinstance(obj, Atom)
    return 1 + sum(_symbol_count(a) for a in obj.args)


def _strictly_less_general(t: Term, t2: Term) -> bool:
    return more_general(t, t2) and not more_general(t2, t)


def _phase1_candidates(simples) -> list[tuple[Variable, Term]]:
    """Variable bindings determined by simple pairs, most-instantiated first.

    A binding X/t is only eligible when no other simple pair offers X a
    strictly more instantiated partner.
    """
    oriented: list[tuple[tuple, Variable, Term]] = []
    partners: dict[Variable, list[Term]] = {}
    for p in simples:
        for side, (v, t) in enumerate(((p.left, p.right), (p.right, p.left))):
            if isinstance(v, Variable) and not occurs_in(v, t):
                key = (p.position, p.left_atom, p.right_atom, side)
                oriented.append((key, v, t))
                partners.setdefault(v, []).append(t)
    allowed: list[tuple[Variable, Term]] = []
    seen: set[tuple[Variable, Term]] = set()
    for _, v, t in sorted(oriented, key=lambda e: e[0]):
        if (v, t) in seen:
            continue
        seen.add((v, t))
        if any(_strictly_less_general(t, other) for other in partners[v]):
            continue
        allowed.append((v, t))
    return allowed


def max_unify_substs(subject: Atom, pos, names: NameSource | None = None,
                     trace: list[str] | None = None,
                     check_invariants: bool = True) -> tuple[Substitution, ...]:
    """All maximal unifying substitutions of ``subject`` against ``pos``.

    Explores the algorithm's nondeterministic choices depth-first in a
    fixed order (position path, then source-atom indices) and deduplicates
    outcomes up to renaming of reserved variables.  For an empty ``pos``
    the only answer is the identity.
    """
    pos = tuple(pos)
    if has_unif_variables((subject,) + pos):
        raise ValueError("inputs must not contain reserved solver variables")
    for h in pos:
        if not unifiable(subject, h):
            raise ValueError(f"{h} does not unify with {subject}")
    if names is None:
        names = NameSource(avoid=variables((subject,) + pos))
    results: list[Substitution] = []
    seen_results: set = set()
    seen_states: set = set()
    input_vars = variables((subject,) + pos)
    # Generalization steps are not guaranteed to shrink any simple local
    # measure (a reversed-orientation occurrence in a third atom can keep
    # the pair count level), so a generous depth cap guards the recursion.
    max_level = 16 + 8 * sum(_symbol_count(a) for a in (subject,) + pos)

    def note(depth_: int, text: str) -> None:
        if trace is not None:
            trace.append("  " * depth_ + text)

    def emit(final: Atom) -> None:
        theta = match(subject, final)
        if theta is None:
            raise SolverInternalError(f"subject no longer matches the joined atom {final}")
        # variable-to-variable bindings can leave a bound subject variable
        # inside another binding's range; rename such occurrences so the
        # result is idempotent (it stays the same up to renaming)
        range_vars: set[Variable] = set()
        for _, t in theta.items():
            range_vars |= variables(t)
        overlap = theta.domain() & range_vars
        if overlap:
            renaming = Substitution({v: names.fresh()
                                     for v in sorted(overlap, key=variable_sort_key)})
            theta = Substitution({v: renaming.apply(t) for v, t in theta.items()})
        key = (frozenset(theta.domain()),
               canonical(tuple(theta.get(v)
                               for v in sorted(theta.domain(), key=variable_sort_key)),
                         rigid=input_vars))
        if key not in seen_results:
            seen_results.add(key)
            results.append(theta)

    def explore(batoms: tuple[Atom, ...], level: int) -> None:
        if level > max_level:
            raise SolverInternalError("generalization loop exceeded its depth cap")
        state_key = _canon_u(batoms)
        if state_key in seen_states:
            return
        seen_states.add(state_key)
        if check_invariants:
            scratch = NameSource(avoid=variables(batoms) | input_vars)
            for b in batoms:
                # unifiability is meant up to renaming the member apart;
                # bindings may thread subject variables through the set
                fresh_b = rename_apart(Clause("chk", b), scratch).head
                if not unifiable(subject, fresh_b):
                    raise SolverInternalError(f"subject stopped unifying with {b}")
            if not any(more_general(subject, b) for b in batoms):
                raise SolverInternalError("subject is no longer more general than any atom")
        pairs = disagreement_pairs(batoms)
        simples = [p for p in pairs if p.simple]
        if simples:
            candidates = _phase1_candidates(simples)
            if not candidates:
                raise SolverInternalError("simple pairs present but none eligible")
            old_vars = variables(batoms)
            for var, term in candidates:
                binding = Substitution({var: term})
                new_atoms = _dedup_atoms(binding.apply(a) for a in batoms)
                if check_invariants and not variables(new_atoms) < old_vars:
                    raise SolverInternalError("variable elimination did not shrink the state")
                note(level, f"bind {var}/{term_to_text(term)} -> {{{', '.join(map(str, new_atoms))}}}")
                explore(new_atoms, level + 1)
            return
        if len(batoms) == 1:
            emit(batoms[0])
            return
        groups: dict[tuple[Term, Term], list] = {}
        order: dict[tuple[Term, Term], tuple] = {}
        for p in sorted(pairs, key=lambda p: (p.position, p.left_atom, p.right_atom)):
            groups.setdefault(p.value, []).append(p)
            order.setdefault(p.value, (p.position, p.left_atom, p.right_atom))
        for value in sorted(groups, key=lambda v: order[v]):
            occurrences = groups[value]
            fresh_u = names.fresh_unif()
            updated = list(batoms)
            for occ in occurrences:
                updated[occ.left_atom] = _set_at(updated[occ.left_atom], occ.position, fresh_u)
                updated[occ.right_atom] = _set_at(updated[occ.right_atom], occ.position, fresh_u)
            new_atoms = _dedup_atoms(updated)
            left, right = value
            note(level, f"generalize ({term_to_text(left)},{term_to_text(right)}) -> {fresh_u}")
            explore(new_atoms, level + 1)

    explore(_dedup_atoms((subject,) + pos), 0)
    if not results:
        raise SolverInternalError("search ended with no maximal unifying substitution")
    return tuple(results)


def _ground_terms_by_depth(sig: SolverSignature, k: int,
                           include_fresh: bool) -> list[list[Term]]:
    """Terms of each exact depth 0..k: program constants first, reserved last."""
    level0: list[Term] = [Constant(c) for c in sig.constants]
    if include_fresh:
        level0.append(Constant(sig.fresh_constant))
    levels = [level0]
    for d in range(1, k + 1):
        below = [t for level in levels for t in level]
        level: list[Term] = []
        for functor, arity in sig.functors:
            for combo in itertools.product(below, repeat=arity):
                if max(depth(t) for t in combo) == d - 1:
                    level.append(Compound(functor, combo))
        levels.append(level)
    return levels


def grounding_enum(vars, sig: SolverSignature, k: int, include_fresh: bool = True):
    """Idempotent substitutions grounding exactly ``vars`` to depth <= k terms.

    Graded order: total depth ascending, then the per-variable term streams
    lexicographically (constants in program order, the reserved constant
    last at depth 0, then functors in program order).
    """
    slots = sorted(vars, key=variable_sort_key)
    if not slots:
        yield Substitution()
        return
    levels = _ground_terms_by_depth(sig, k, include_fresh)
    m = len(slots)
    for total in range(0, k * m + 1):
        for shape in itertools.product(range(min(k, total) + 1), repeat=m):
            if sum(shape) != total:
                continue
            pools = [levels[d] for d in shape]
            if any(not pool for pool in pools):
                continue
            for combo in itertools.product(*pools):
                yield Substitution(dict(zip(slots, combo)))


def _contains_fresh(subst: Substitution, sig: SolverSignature) -> bool:
    marker = Constant(sig.fresh_constant)

    def walk(t: Term) -> bool:
        if t == marker:
            return True
        if isinstance(t, Compound):
            return any(walk(a) for a in t.args)
        return False

    return any(walk(t) for _, t in subst.items())


def _grounding_candidates(vars, sig: SolverSignature, k: int):
    """Program-symbol groundings first, reserved-constant ones after."""
    yield from grounding_enum(vars, sig, k, include_fresh=False)
    for eta in grounding_enum(vars, sig, k, include_fresh=True):
        if _contains_fresh(eta, sig):
            yield eta


def pos_neg(prob: UnifProblem, sig: SolverSignature,
            names: NameSource | None = None,
            trace: list[str] | None = None) -> Substitution | None:
    """Solve the full problem; failure is a value, not an error.

    Iterates maximal unifying substitutions in order and, for each, bounded
    grounding candidates in order; the first assignment passing the
    domain, namespace and negative-unifiability checks wins.
    """
    prob.validate()
    if names is None:
        names = NameSource(avoid=variables((prob.subject,) + prob.pos + prob.neg)
                           | set(prob.ground_vars))
    thetas = max_unify_substs(prob.subject, prob.pos, names=names, trace=trace)
    subject_vars = variables(prob.subject)
    for theta in thetas:
        subject_theta = theta.apply(prob.subject)
        allowed = variables(subject_theta)
        need = variables(tuple(theta.apply(v) for v in
                               sorted(prob.ground_vars, key=variable_sort_key)))
        for eta in _grounding_candidates(need, sig, prob.depth_bound):
            if not eta.domain() <= allowed:
                continue
            if has_unif_variables(eta):
                continue
            candidate = theta.compose(eta)
            instantiated = candidate.apply(prob.subject)
            if any(unifiable(instantiated, h) for h in prob.neg):
                continue
            return candidate.restrict(subject_vars)
    return None


def alt_k(a: Atom, l_target, l_all, g, program: Program, k: int,
          names: NameSource | None = None,
          trace: list[str] | None = None) -> Substitution | None:
    """Solve for a goal that matches exactly the target clause heads.

    Positive atoms are the renamed-apart heads of ``l_target``; negative
    ones the heads of ``l_all`` minus ``l_target``.  Any result binding a
    variable to a term deeper than ``k`` is rejected.
    """
    target = set(l_target)
    everything = set(l_all)
    unknown = everything - set(program.clause_by_label)
    if unknown:
        raise UnknownLabelError(f"labels not in program: {sorted(unknown)}")
    if not target <= everything:
        raise ValueError("target labels must be a subset of all matched labels")
    if names is None:
        names = NameSource(avoid=variables(a) | set(g))
    pos_heads = []
    neg_heads = []
    for clause in program.clauses:
        if clause.label in target:
            pos_heads.append(rename_apart(clause, names).head)
        elif clause.label in everything:
            neg_heads.append(rename_apart(clause, names).head)
    prob = UnifProblem(a, tuple(pos_heads), tuple(neg_heads), frozenset(g), k)
    result = pos_neg(prob, SolverSignature.from_program(program), names=names, trace=trace)
    if result is not None and any(depth(t) > k for _, t in result.items()):
        return None
    return result


def _binding_tuples(slot_count: int, sig: SolverSignature, max_depth: int):
    """Candidate term tuples for the oracle, canonical shared variables.

    Variables are drawn as back-references: each variable position either
    reuses an earlier pool variable or introduces the next one, so every
    alpha-equivalence class of bindings is produced exactly once.
    """

    def gen_term(limit: int, used: int, include_fresh: bool):
        for c in sig.constants:
            yield Constant(c), used
        if include_fresh:
            yield Constant(sig.fresh_constant), used
        for i in range(used):
            yield Variable(f"_V{i + 1}"), used
        yield Variable(f"_V{used + 1}"), used + 1
        if limit > 0:
            for functor, arity in sig.functors:
                yield from gen_compound(functor, arity, limit, used, include_fresh)

    def gen_compound(functor: str, arity: int, limit: int, used: int, include_fresh: bool):
        def gen_args(i: int, used_: int, acc: tuple):
            if i == arity:
                yield Compound(functor, acc), used_
                return
            for t, used2 in gen_term(limit - 1, used_, include_fresh):
                yield from gen_args(i + 1, used2, acc + (t,))

        yield from gen_args(0, used, ())

    def gen_tuple(include_fresh: bool):
        def rec(i: int, used: int, acc: tuple):
            if i == slot_count:
                yield acc
                return
            for t, used2 in gen_term(max_depth, used, include_fresh):
                yield from rec(i + 1, used2, acc + (t,))

        yield from rec(0, 0, ())

    plain = list(gen_tuple(include_fresh=False))
    fresh_marker = Constant(sig.fresh_constant)

    def uses_fresh(terms: tuple) -> bool:
        def walk(t: Term) -> bool:
            if t == fresh_marker:
                return True
            if isinstance(t, Compound):
                return any(walk(a) for a in t.args)
            return False

        return any(walk(t) for t in terms)

    with_fresh = [ts for ts in gen_tuple(include_fresh=True) if uses_fresh(ts)]
    ranked = ([(0, i, ts) for i, ts in enumerate(plain)]
              + [(1, i, ts) for i, ts in enumerate(with_fresh)])
    ranked.sort(key=lambda e: (e[0], max((depth(t) for t in e[2]), default=0), e[1]))
    return [ts for _, _, ts in ranked]


def naive_alt_oracle(a: Atom, pos, neg, g, sig: SolverSignature,
                     max_depth: int) -> Substitution | None:
    """Depth-staged generate-and-test solver used only as a test oracle.

    Binds the subject's variables to candidate terms of depth 0, then 1,
    and so on, testing the positive, negative and groundness conditions
    directly against renamed-apart copies of the given atoms.
    """
    pos = tuple(pos)
    neg = tuple(neg)
    slots = sorted(variables(a), key=variable_sort_key)
    g = sorted(set(g), key=variable_sort_key)
    for terms in _binding_tuples(len(slots), sig, max_depth):
        candidate = Substitution(dict(zip(slots, terms)))
        instantiated = candidate.apply(a)
        scratch = NameSource(avoid=variables(instantiated))
        inst_vars = sorted(variables(instantiated), key=variable_sort_key)

        def disjoint(h: Atom) -> Atom:
            renaming = Substitution({v: scratch.fresh()
                                     for v in sorted(variables(h), key=variable_sort_key)})
            return renaming.apply(h)

        if not all(unifiable(instantiated, disjoint(h)) for h in pos):
            continue
        if any(unifiable(instantiated, disjoint(h)) for h in neg):
            continue
        if not all(is_ground(candidate.apply(v)) for v in g):
            continue
        return candidate
    return None
