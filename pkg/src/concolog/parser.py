"""Reader for the pure-Prolog subset the engines execute.

Edinburgh-style syntax: ``fact.`` and ``head :- b1, ..., bk.`` clauses,
``%`` comments, variables starting uppercase or ``_``, atoms and functors
starting lowercase, integers as uninterpreted constant symbols, and list
sugar ``[a,b|T]`` desugared to ``'.'/2`` chains.  Cut, negation, built-ins,
arithmetic and unification operators are rejected up front: the engines
have no semantics for them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    Atom,
    Clause,
    Compound,
    Constant,
    EMPTY_LIST,
    LIST_FUNCTOR,
    Program,
    Term,
    Variable,
)


class ParseError(Exception):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class UnsupportedFeatureError(Exception):
    def __init__(self, line: int, column: int, feature: str):
        super().__init__(f"{line}:{column}: unsupported feature: {feature}")
        self.line = line
        self.column = column
        self.feature = feature


class NonAtomicGoalError(Exception):
    pass


# Predicates the engines reserve or would misinterpret.  `fail` doubles as
# the internal failure marker, so user programs may not define or call it.
RESERVED_PREDICATES = {"true", "fail", "call", "is", "not", "assert", "asserta",
                       "assertz", "retract", "findall", "bagof", "setof"}

_UNSUPPORTED_PUNCT = {
    "!": "cut",
    ";": "disjunction",
    "->": "if-then-else",
    "\\+": "negation",
    "=": "unification built-in",
    "\\=": "disunification built-in",
    "<": "arithmetic comparison",
    ">": "arithmetic comparison",
    "=<": "arithmetic comparison",
    ">=": "arithmetic comparison",
    "=:=": "arithmetic comparison",
    "=\\=": "arithmetic comparison",
    "-": "arithmetic operator",
    "+": "arithmetic operator",
    "*": "arithmetic operator",
    "/": "arithmetic operator",
}


@dataclass(frozen=True)
class Token:
    kind: str  # NAME, VAR, INT, PUNCT, END, EOF
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                advance(1)
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "VAR" if (ch == "_" or ch.isupper()) else "NAME"
            tokens.append(Token(kind, word, start_line, start_col))
            advance(j - i)
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("INT", text[i:j], start_line, start_col))
            advance(j - i)
            continue
        if ch == ".":
            rest = text[i + 1:i + 2]
            if rest == "" or rest in " \t\r\n%":
                tokens.append(Token("END", ".", start_line, start_col))
                advance(1)
                continue
            raise ParseError(start_line, start_col, "'.' is only valid as a clause terminator")
        if text.startswith(":-", i):
            tokens.append(Token("PUNCT", ":-", start_line, start_col))
            advance(2)
            continue
        for punct in ("=\\=", "=:=", "\\+", "\\=", "=<", ">=", "->"):
            if text.startswith(punct, i):
                raise UnsupportedFeatureError(start_line, start_col, _UNSUPPORTED_PUNCT[punct])
        if ch in _UNSUPPORTED_PUNCT:
            raise UnsupportedFeatureError(start_line, start_col, _UNSUPPORTED_PUNCT[ch])
        if ch in "(),[]|":
            tokens.append(Token("PUNCT", ch, start_line, start_col))
            advance(1)
            continue
        if ch in "'\"":
            raise ParseError(start_line, start_col, "quoted atoms and strings are not supported")
        raise ParseError(start_line, start_col, f"unexpected character {ch!r}")
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(tok.line, tok.column, f"expected {want!r}, found {tok.text or tok.kind!r}")
        return self.next()

    def parse_term(self) -> Term:
        tok = self.peek()
        if tok.kind == "VAR":
            self.next()
            return Variable(tok.text)
        if tok.kind == "INT":
            self.next()
            return Constant(tok.text)
        if tok.kind == "NAME":
            self.next()
            if self.peek().kind == "PUNCT" and self.peek().text == "(":
                self.next()
                args = [self.parse_term()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.parse_term())
                self.expect("PUNCT", ")")
                return Compound(tok.text, tuple(args))
            return Constant(tok.text)
        if tok.kind == "PUNCT" and tok.text == "[":
            return self.parse_list()
        raise ParseError(tok.line, tok.column, f"expected a term, found {tok.text or tok.kind!r}")

    def parse_list(self) -> Term:
        self.expect("PUNCT", "[")
        if self.peek().text == "]":
            self.next()
            return EMPTY_LIST
        items = [self.parse_term()]
        while self.peek().text == ",":
            self.next()
            items.append(self.parse_term())
        tail: Term = EMPTY_LIST
        if self.peek().text == "|":
            self.next()
            tail = self.parse_term()
        self.expect("PUNCT", "]")
        for item in reversed(items):
            tail = Compound(LIST_FUNCTOR, (item, tail))
        return tail

    def parse_atom(self) -> Atom:
        tok = self.peek()
        if tok.kind == "VAR":
            raise UnsupportedFeatureError(tok.line, tok.column,
                                          "variable at a predicate position")
        if tok.kind != "NAME":
            raise ParseError(tok.line, tok.column,
                             f"expected a predicate, found {tok.text or tok.kind!r}")
        if tok.text in RESERVED_PREDICATES:
            raise UnsupportedFeatureError(tok.line, tok.column,
                                          f"reserved or built-in predicate {tok.text!r}")
        term = self.parse_term()
        if isinstance(term, Constant):
            return Atom(term.symbol, ())
        assert isinstance(term, Compound)
        return Atom(term.functor, term.args)

    def parse_clause(self, label: str) -> Clause:
        head = self.parse_atom()
        body: list[Atom] = []
        if self.peek().kind == "PUNCT" and self.peek().text == ":-":
            self.next()
            body.append(self.parse_atom())
            while self.peek().text == ",":
                self.next()
                body.append(self.parse_atom())
        self.expect("END")
        return Clause(label, head, tuple(body))

    def parse_program(self, origin: str) -> Program:
        clauses = []
        while self.peek().kind != "EOF":
            clauses.append(self.parse_clause(f"l{len(clauses) + 1}"))
        return Program(clauses, origin=origin)


def parse_program(text: str, origin: str = "<string>") -> Program:
    """Parse source text into a labeled program.

    Clauses keep textual order and receive the dense labels l1..ln.
    """
    return _Parser(text).parse_program(origin)


def parse_program_file(path: str) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), origin=path)


def parse_goal(text: str) -> Atom:
    """Parse one atomic goal; conjunctions are rejected."""
    parser = _Parser(text)
    atom = parser.parse_atom()
    tok = parser.peek()
    if tok.kind == "END":
        parser.next()
        tok = parser.peek()
    if tok.kind == "PUNCT" and tok.text == ",":
        raise NonAtomicGoalError("only atomic goals are supported")
    if tok.kind != "EOF":
        raise ParseError(tok.line, tok.column, f"unexpected input after goal: {tok.text!r}")
    return atom
