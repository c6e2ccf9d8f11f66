"""First-order terms, substitutions, unification and disagreement pairs.

Every other module builds on the values defined here.  All values are
immutable; the only mutable object is :class:`NameSource`, which hands out
fresh variable names and must not be shared between concurrent runs.

Variables live in two disjoint namespaces: ordinary program variables and a
reserved namespace used by the unification solver to mark positions that
must not be instantiated further.  Parsed source never contains reserved
variables.

Terms cache their hash and compare, substitute and print iteratively:
diverging programs build very deep terms, and tree walks must not hit the
interpreter's recursion limit before the engine's fuel runs out.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

PROGRAM_NS = "prog"
UNIF_NS = "u"


@dataclass(frozen=True)
class Variable:
    name: str
    namespace: str = PROGRAM_NS

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True, eq=False, repr=False)
class Compound:
    functor: str
    args: tuple["Term", ...]
    _hash: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.args) < 1:
            raise ValueError("compound terms need at least one argument")
        # children are built first, so their hashes are already cached and
        # this stays O(arity) even for very deep terms
        object.__setattr__(self, "_hash", hash((self.functor, self.args)))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Compound):
            return False
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b:
                continue
            if isinstance(a, Compound):
                if (not isinstance(b, Compound) or a._hash != b._hash
                        or a.functor != b.functor or len(a.args) != len(b.args)):
                    return False
                stack.extend(zip(a.args, b.args))
            elif a != b:
                return False
        return True

    def __str__(self) -> str:
        return term_to_text(self)

    def __repr__(self) -> str:
        return f"Compound({term_to_text(self)})"


Term = Union[Variable, Constant, Compound]


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def indicator(self) -> tuple[str, int]:
        return (self.predicate, len(self.args))

    def __str__(self) -> str:
        return atom_to_text(self)


@dataclass(frozen=True)
class Clause:
    """A labeled program clause; an empty body makes it a fact."""

    label: str
    head: Atom
    body: tuple[Atom, ...] = ()

    def __str__(self) -> str:
        return clause_to_text(self)


class Program:
    """An ordered clause sequence plus the signature occurring in it.

    Clause order is textual order; the signature records constants,
    functor/arity pairs and predicate/arity pairs in order of first
    occurrence (head first, then body, arguments left to right).
    """

    def __init__(self, clauses: Iterable[Clause], origin: str = "<memory>"):
        self.clauses: tuple[Clause, ...] = tuple(clauses)
        self.origin = origin
        seen = set()
        by_label = {}
        for clause in self.clauses:
            if clause.label in seen:
                raise ValueError(f"duplicate clause label {clause.label!r}")
            seen.add(clause.label)
            by_label[clause.label] = clause
        self.clause_by_label: dict[str, Clause] = by_label
        constants: list[str] = []
        functors: list[tuple[str, int]] = []
        predicates: list[tuple[str, int]] = []
        for clause in self.clauses:
            for atom in (clause.head, *clause.body):
                if atom.indicator not in predicates:
                    predicates.append(atom.indicator)
                for t in _iter_subterms(atom.args):
                    if isinstance(t, Constant):
                        if t.symbol not in constants:
                            constants.append(t.symbol)
                    elif isinstance(t, Compound):
                        key = (t.functor, len(t.args))
                        if key not in functors:
                            functors.append(key)
        self.constants: tuple[str, ...] = tuple(constants)
        self.functors: tuple[tuple[str, int], ...] = tuple(functors)
        self.predicates: tuple[tuple[str, int], ...] = tuple(predicates)

    def __len__(self) -> int:
        return len(self.clauses)

    def __str__(self) -> str:
        return program_to_text(self)


_NUM_SUFFIX = re.compile(r"^(.*?)(\d+)$")


@functools.lru_cache(maxsize=65536)
def _natural_key(name: str) -> tuple:
    m = _NUM_SUFFIX.match(name)
    if m:
        return (m.group(1), 0, int(m.group(2)))
    return (name, 1, 0)


def variable_sort_key(v: Variable) -> tuple:
    return (v.namespace, _natural_key(v.name))


class NameSource:
    """Monotone counter handing out session-unique fresh variables.

    ``avoid`` lists names already in use (e.g. the initial goal's
    variables) that the counter must never produce.
    """

    def __init__(self, avoid: Iterable[Variable] = ()):
        self._counter = 0
        self._avoid = {v.name for v in avoid}

    def _next(self, prefix: str) -> str:
        while True:
            self._counter += 1
            name = f"{prefix}{self._counter}"
            if name not in self._avoid:
                return name

    def fresh(self) -> Variable:
        return Variable(self._next("_G"), PROGRAM_NS)

    def fresh_unif(self) -> Variable:
        return Variable(self._next("_U"), UNIF_NS)


def _iter_subterms(obj) -> Iterator[Term]:
    """Pre-order, left-to-right iteration over all terms inside ``obj``."""
    stack = [obj]
    while stack:
        o = stack.pop()
        if isinstance(o, (Variable, Constant)):
            yield o
        elif isinstance(o, Compound):
            yield o
            stack.extend(reversed(o.args))
        elif isinstance(o, Atom):
            stack.extend(reversed(o.args))
        elif isinstance(o, Clause):
            stack.extend(reversed((o.head,) + o.body))
        elif isinstance(o, tuple):
            stack.extend(reversed(o))
        elif isinstance(o, Substitution):
            for var, term in o.items():
                stack.append(term)
                stack.append(var)
        else:
            raise TypeError(f"cannot walk {type(o).__name__}")


def _apply_mapping(mapping: Mapping[Variable, Term], term: Term) -> Term:
    """Variable replacement on one term, iterative post-order rebuild."""
    if isinstance(term, Variable):
        return mapping.get(term, term)
    if isinstance(term, Constant):
        return term
    results: list[Term] = []
    stack: list[tuple[Term, bool]] = [(term, False)]
    while stack:
        node, visited = stack.pop()
        if isinstance(node, Variable):
            results.append(mapping.get(node, node))
        elif isinstance(node, Constant):
            results.append(node)
        elif not visited:
            stack.append((node, True))
            stack.extend((a, False) for a in reversed(node.args))
        else:
            n = len(node.args)
            new_args = tuple(results[-n:])
            del results[-n:]
            if all(x is y for x, y in zip(new_args, node.args)):
                results.append(node)
            else:
                results.append(Compound(node.functor, new_args))
    return results[0]


Applicable = Union[Term, Atom, Clause, tuple]


class Substitution:
    """An idempotent finite map from variables to terms.

    Identity bindings are dropped on construction.  Instances compare and
    hash by their binding map, so two substitutions are equal exactly when
    they bind the same variables to the same terms.
    """

    __slots__ = ("_map",)

    def __init__(self, bindings: Mapping[Variable, Term] | None = None):
        items = {}
        if bindings:
            for var, term in sorted(bindings.items(), key=lambda kv: variable_sort_key(kv[0])):
                if term != var:
                    items[var] = term
        self._map: dict[Variable, Term] = items

    @property
    def mapping(self) -> Mapping[Variable, Term]:
        return self._map

    def domain(self) -> frozenset[Variable]:
        return frozenset(self._map)

    def items(self):
        return self._map.items()

    def get(self, var: Variable, default: Term | None = None):
        return self._map.get(var, default)

    def __len__(self) -> int:
        return len(self._map)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Substitution) and self._map == other._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __str__(self) -> str:
        inner = ", ".join(f"{v}/{term_to_text(t)}" for v, t in self._map.items())
        return "{" + inner + "}"

    def __repr__(self) -> str:
        return f"Substitution({self})"

    def apply(self, obj: Applicable) -> Applicable:
        """Simultaneously replace bound variables throughout ``obj``."""
        if isinstance(obj, (Variable, Constant, Compound)):
            return _apply_mapping(self._map, obj)
        if isinstance(obj, Atom):
            if not self._map or self._map.keys().isdisjoint(atom_free_vars(obj)):
                return obj
            return Atom(obj.predicate,
                        tuple(_apply_mapping(self._map, a) for a in obj.args))
        if isinstance(obj, Clause):
            return Clause(obj.label, self.apply(obj.head),
                          tuple(self.apply(b) for b in obj.body))
        if isinstance(obj, tuple):
            return tuple(self.apply(o) for o in obj)
        raise TypeError(f"cannot apply substitution to {type(obj).__name__}")

    def compose(self, other: "Substitution") -> "Substitution":
        """Return the substitution equivalent to applying self, then other."""
        out: dict[Variable, Term] = {}
        for var, term in self._map.items():
            out[var] = other.apply(term)
        for var, term in other._map.items():
            if var not in self._map:
                out[var] = term
        return Substitution(out)

    def restrict(self, keep: Iterable[Variable]) -> "Substitution":
        keep_set = set(keep)
        return Substitution({v: t for v, t in self._map.items() if v in keep_set})

    def is_idempotent(self) -> bool:
        """Extensional check on the domain and range variables."""
        for probe in variables(self):
            once = self.apply(probe)
            if self.apply(once) != once:
                return False
        return True


EMPTY_SUBSTITUTION = Substitution()


def apply(subst: Substitution, obj: Applicable) -> Applicable:
    return subst.apply(obj)


def compose(first: Substitution, second: Substitution) -> Substitution:
    return first.compose(second)


def variables(obj) -> frozenset[Variable]:
    """All variables occurring in a term, atom, clause, goal or substitution."""
    return frozenset(t for t in _iter_subterms(obj) if isinstance(t, Variable))


def atom_free_vars(a: Atom) -> frozenset[Variable]:
    """Cached variable set of an atom; atoms are shared across stack copies."""
    cached = getattr(a, "_free_vars", None)
    if cached is None:
        cached = variables(a)
        object.__setattr__(a, "_free_vars", cached)
    return cached


def ordered_variables(obj) -> list[Variable]:
    """Variables in order of first occurrence, left to right."""
    seen: set[Variable] = set()
    out: list[Variable] = []
    for t in _iter_subterms(obj):
        if isinstance(t, Variable) and t not in seen:
            seen.add(t)
            out.append(t)
    return out


def is_ground(obj) -> bool:
    return not any(isinstance(t, Variable) for t in _iter_subterms(obj))


def has_unif_variables(obj) -> bool:
    return any(isinstance(t, Variable) and t.namespace == UNIF_NS
               for t in _iter_subterms(obj))


def depth(t: Term) -> int:
    """Term depth: 0 for variables and constants, 1 + deepest argument else."""
    best = 0
    stack = [(t, 0)]
    while stack:
        node, level = stack.pop()
        if isinstance(node, Compound):
            stack.extend((a, level + 1) for a in node.args)
        elif level > best:
            best = level
    return best


def occurs_in(var: Variable, t: Term) -> bool:
    return any(sub == var for sub in _iter_subterms(t))


def _atom_pair_to_terms(a, b):
    if isinstance(a, Atom) and isinstance(b, Atom):
        if a.indicator != b.indicator:
            return None
        if not a.args:
            return []
        return list(zip(a.args, b.args))
    if isinstance(a, Atom) or isinstance(b, Atom):
        raise TypeError("cannot unify an atom with a term")
    return [(a, b)]


def mgu(a, b) -> Substitution | None:
    """Most general unifier of two atoms or terms, with occurs-check.

    Returns None when no unifier exists; failure is a value, not an error.
    Variable-variable pairs bind the right variable to the left one, so
    goal variables survive unification against renamed clause heads.
    """
    pairs = _atom_pair_to_terms(a, b)
    if pairs is None:
        return None
    subst: dict[Variable, Term] = {}

    def bind(var: Variable, term: Term) -> None:
        one = {var: term}
        for v in list(subst):
            subst[v] = _apply_mapping(one, subst[v])
        subst[var] = term

    stack = list(reversed(pairs))
    while stack:
        s, t = stack.pop()
        s = _apply_mapping(subst, s) if subst else s
        t = _apply_mapping(subst, t) if subst else t
        if s == t:
            continue
        if isinstance(s, Variable) and isinstance(t, Variable):
            bind(t, s)
        elif isinstance(s, Variable):
            if occurs_in(s, t):
                return None
            bind(s, t)
        elif isinstance(t, Variable):
            if occurs_in(t, s):
                return None
            bind(t, s)
        elif isinstance(s, Compound) and isinstance(t, Compound):
            if s.functor != t.functor or len(s.args) != len(t.args):
                return None
            stack.extend(reversed(list(zip(s.args, t.args))))
        else:
            return None
    return Substitution(subst)


def unifiable(a, b) -> bool:
    return mgu(a, b) is not None


def match_into(bound: dict[Variable, Term], pairs) -> bool:
    """Extend a binding map so the left terms equal the right ones, or fail."""
    stack = list(reversed(list(pairs)))
    while stack:
        g, s = stack.pop()
        if isinstance(g, Variable):
            if g in bound:
                if bound[g] != s:
                    return False
            elif g == s:
                continue
            else:
                bound[g] = s
        elif isinstance(g, Constant):
            if g != s:
                return False
        else:
            if (not isinstance(s, Compound) or s.functor != g.functor
                    or len(s.args) != len(g.args)):
                return False
            stack.extend(reversed(list(zip(g.args, s.args))))
    return True


def match(general, specific) -> Substitution | None:
    """One-sided matching: a substitution making ``general`` equal ``specific``."""
    pairs = _atom_pair_to_terms(general, specific)
    if pairs is None:
        return None
    bound: dict[Variable, Term] = {}
    if not match_into(bound, pairs):
        return None
    return Substitution(bound)


def more_general(s1, s2) -> bool:
    """True iff some substitution instantiates s1 into s2."""
    return match(s1, s2) is not None


def variant(a, b) -> bool:
    """Equality up to variable renaming."""
    return more_general(a, b) and more_general(b, a)


def clause_variables(clause: Clause) -> tuple[Variable, ...]:
    """Cached, deterministically ordered variable list of a clause."""
    cached = getattr(clause, "_var_list", None)
    if cached is None:
        cached = tuple(sorted(variables(clause), key=variable_sort_key))
        object.__setattr__(clause, "_var_list", cached)
    return cached


def rename_apart(clause: Clause, names: NameSource) -> Clause:
    """A copy of the clause over never-used-before program variables."""
    ordered = clause_variables(clause)
    if not ordered:
        return clause
    renaming = {v: names.fresh() for v in ordered}
    return Clause(clause.label,
                  Atom(clause.head.predicate,
                       tuple(_apply_mapping(renaming, t) for t in clause.head.args)),
                  tuple(Atom(b.predicate,
                             tuple(_apply_mapping(renaming, t) for t in b.args))
                        for b in clause.body))


@dataclass(frozen=True)
class DisagreementPair:
    """Outermost differing subterms of two atoms at a shared position.

    ``simple`` marks pairs where one side is a variable absent from the
    other side, with no reserved-namespace variable anywhere in the pair.
    """

    left: Term
    right: Term
    position: tuple[int, ...]
    left_atom: int
    right_atom: int
    simple: bool = field(default=False)

    @property
    def value(self) -> tuple[Term, Term]:
        return (self.left, self.right)


def _is_simple_pair(left: Term, right: Term) -> bool:
    if has_unif_variables(left) or has_unif_variables(right):
        return False
    if isinstance(left, Variable) and not occurs_in(left, right):
        return True
    if isinstance(right, Variable) and not occurs_in(right, left):
        return True
    return False


def disagreement_pairs(atoms: Iterable[Atom]) -> tuple[DisagreementPair, ...]:
    """All pairwise disagreement pairs of atoms sharing one predicate."""
    seq = list(atoms)
    indicators = {a.indicator for a in seq}
    if len(indicators) > 1:
        raise ValueError(f"atoms must share predicate/arity, got {sorted(indicators)}")
    out: list[DisagreementPair] = []
    for i, j in itertools.combinations(range(len(seq)), 2):
        stack = [(la, ra, (k,)) for k, (la, ra) in
                 enumerate(zip(seq[i].args, seq[j].args), start=1)][::-1]
        while stack:
            l, r, pos = stack.pop()
            if l == r:
                continue
            same_root = (isinstance(l, Compound) and isinstance(r, Compound)
                         and l.functor == r.functor and len(l.args) == len(r.args))
            if same_root:
                stack.extend((la, ra, pos + (k,)) for k, (la, ra) in
                             reversed(list(enumerate(zip(l.args, r.args), start=1))))
            else:
                out.append(DisagreementPair(l, r, pos, i, j, _is_simple_pair(l, r)))
    return tuple(out)


def canonical(obj, rigid: Iterable[Variable] = ()):
    """Rename non-rigid variables to a canonical sequence, for variant checks."""
    rigid_set = set(rigid)
    mapping: dict[Variable, Variable] = {}
    for v in ordered_variables(obj):
        if v not in rigid_set and v not in mapping:
            mapping[v] = Variable(f"_C{len(mapping) + 1}", PROGRAM_NS)
    if isinstance(obj, (Variable, Constant, Compound)):
        return _apply_mapping(mapping, obj)
    return Substitution(mapping).apply(obj)


def substitutions_equivalent(s1: Substitution, s2: Substitution,
                             rigid: Iterable[Variable] | None = None) -> bool:
    """Equality of substitutions up to a bijective renaming of range variables.

    Domain variables (and any explicitly rigid ones) must match exactly.
    """
    if s1.domain() != s2.domain():
        return False
    dom = sorted(s1.domain(), key=variable_sort_key)
    rigid_set = set(dom) if rigid is None else set(rigid) | set(dom)
    left = canonical(tuple(s1.get(v) for v in dom), rigid_set)
    right = canonical(tuple(s2.get(v) for v in dom), rigid_set)
    return left == right


# ---------------------------------------------------------------------------
# Pretty printing (canonical Edinburgh-style text, list chains re-sugared)

LIST_FUNCTOR = "."
EMPTY_LIST = Constant("[]")


def term_to_text(t: Term) -> str:
    """Canonical text; iterative so very deep terms still print."""
    results: list[str] = []
    stack: list[tuple[Term, bool]] = [(t, False)]
    while stack:
        node, visited = stack.pop()
        if isinstance(node, Variable):
            results.append(node.name)
        elif isinstance(node, Constant):
            results.append(node.symbol)
        elif not visited:
            stack.append((node, True))
            stack.extend((a, False) for a in reversed(node.args))
        else:
            n = len(node.args)
            parts = results[-n:]
            del results[-n:]
            if node.functor == LIST_FUNCTOR and n == 2:
                head, tail = parts
                if tail == "[]":
                    results.append(f"[{head}]")
                elif tail.startswith("[") and tail.endswith("]"):
                    results.append(f"[{head},{tail[1:-1]}]")
                else:
                    results.append(f"[{head}|{tail}]")
            else:
                results.append(f"{node.functor}({','.join(parts)})")
    return results[0]


def atom_to_text(a: Atom) -> str:
    if not a.args:
        return a.predicate
    inner = ",".join(term_to_text(t) for t in a.args)
    return f"{a.predicate}({inner})"


def clause_to_text(c: Clause) -> str:
    if not c.body:
        return f"{atom_to_text(c.head)}."
    body = ", ".join(atom_to_text(b) for b in c.body)
    return f"{atom_to_text(c.head)} :- {body}."


def program_to_text(p: Program) -> str:
    return "\n".join(clause_to_text(c) for c in p.clauses) + ("\n" if p.clauses else "")


def label_sort_key(label: str) -> tuple:
    return _natural_key(label)


def label_set_to_text(labels: frozenset[str] | set[str]) -> str:
    return "{" + ",".join(sorted(labels, key=label_sort_key)) + "}"


def trace_to_text(trace: tuple[frozenset[str], ...]) -> str:
    return "(" + ",".join(label_set_to_text(s) for s in trace) + ")"
