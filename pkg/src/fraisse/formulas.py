"""Quantifier-free sentences whose constants are natural-number labels.

Grammar (prefix S-expressions)::

    sentence := "true" | "false"
              | "(" "not" sentence ")"
              | "(" ("and" | "or") sentence* ")"
              | "(" "=" term term ")"
              | "(" REL label label ")"
    term     := label | "(" FUN term+ ")"
    label    := decimal natural number

Relation symbols per class: ``E`` for graphs, ``<`` for orders and
``d_r`` for metric classes, one symbol per menu distance r written as an
integer or a fraction (``d_1``, ``d_3/2``); ``d_r x y`` holds when the
distance is exactly r. Function symbols: ``+`` (binary) and ``-`` (unary)
for abelian groups; ``+``, ``*`` (binary) and ``-`` (unary) for fields.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Union

from .core import ContractViolation, FraisseClass, Structure
from .fields import FiniteFieldClass, arithmetic, element_of, label_of
from .abelian import AbelianGroupClass
from .relational import GraphClass, LinearOrderClass, QMetricClass


class FormulaError(ContractViolation):
    """Malformed sentence text."""

    def __init__(self, message: str, pos: int | None = None, expected: tuple[str, ...] = ()):
        where = "" if pos is None else f" at position {pos}"
        exp = f" (expected {' or '.join(expected)})" if expected else ""
        super().__init__(f"{message}{where}{exp}")
        self.pos = pos
        self.expected = expected


# -- AST ------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    label: int


@dataclass(frozen=True)
class App:
    fun: str
    args: tuple["Term", ...]


Term = Union[Const, App]


@dataclass(frozen=True)
class Truth:
    value: bool


@dataclass(frozen=True)
class Rel:
    symbol: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    arg: "Sentence"


@dataclass(frozen=True)
class And:
    args: tuple["Sentence", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Sentence", ...]


Sentence = Union[Truth, Rel, Eq, Not, And, Or]


# -- signatures -------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    relations: dict[str, int]
    functions: dict[str, tuple[int, ...]]  # allowed arities


def _menu_symbol(r: Fraction) -> str:
    return f"d_{r.numerator}" if r.denominator == 1 else f"d_{r.numerator}/{r.denominator}"


def signature(cls: FraisseClass) -> Signature:
    if isinstance(cls, GraphClass):
        return Signature({"E": 2}, {})
    if isinstance(cls, LinearOrderClass):
        return Signature({"<": 2}, {})
    if isinstance(cls, QMetricClass):
        return Signature({_menu_symbol(r): 2 for r in cls.menu}, {})
    if isinstance(cls, AbelianGroupClass):
        return Signature({}, {"+": (2,), "-": (1,)})
    if isinstance(cls, FiniteFieldClass):
        return Signature({}, {"+": (2,), "*": (2,), "-": (1,)})
    raise ContractViolation(f"no signature for class {cls.class_id!r}")


# -- parsing ----------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokens(text: str) -> list[tuple[str, int]]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        tok = m.group(1) or m.group(2) or m.group(3)
        if tok is None:  # trailing whitespace
            break
        out.append((tok, m.start(m.lastindex)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.toks = _tokens(text)
        self.i = 0
        self.end = len(text)
        self.sig = sig

    def peek(self) -> tuple[str | None, int]:
        if self.i < len(self.toks):
            return self.toks[self.i]
        return None, self.end

    def take(self, *expected: str) -> tuple[str, int]:
        tok, pos = self.peek()
        if tok is None:
            raise FormulaError("unexpected end of input", pos, expected)
        if expected and tok not in expected:
            raise FormulaError(f"unexpected token {tok!r}", pos, expected)
        self.i += 1
        return tok, pos

    def label(self) -> int:
        tok, pos = self.take()
        if not tok.isdigit():
            raise FormulaError(f"unexpected token {tok!r}", pos, ("a label",))
        return int(tok)

    def sentence(self) -> Sentence:
        tok, pos = self.peek()
        if tok in ("true", "false"):
            self.i += 1
            return Truth(tok == "true")
        if tok != "(":
            if tok is None:
                raise FormulaError("unexpected end of input", pos, ("'('", "true", "false"))
            raise FormulaError(f"unexpected token {tok!r}", pos, ("'('", "true", "false"))
        self.i += 1
        head, hpos = self.take()
        if head == "not":
            out: Sentence = Not(self.sentence())
        elif head in ("and", "or"):
            parts = []
            while self.peek()[0] not in (")", None):
                parts.append(self.sentence())
            out = And(tuple(parts)) if head == "and" else Or(tuple(parts))
        elif head == "=":
            out = Eq(self.term(), self.term())
        elif head in self.sig.relations:
            args = []
            while self.peek()[0] not in (")", None):
                args.append(self.label())
            if len(args) != self.sig.relations[head]:
                raise FormulaError(f"{head} takes {self.sig.relations[head]} arguments, "
                                   f"got {len(args)}", hpos)
            out = Rel(head, tuple(args))
        else:
            raise FormulaError(f"unknown symbol {head!r}", hpos)
        self.take(")")
        return out

    def term(self) -> Term:
        tok, pos = self.peek()
        if tok != "(":
            return Const(self.label())
        self.i += 1
        fun, fpos = self.take()
        if fun not in self.sig.functions:
            raise FormulaError(f"unknown function symbol {fun!r}", fpos)
        args = []
        while self.peek()[0] not in (")", None):
            args.append(self.term())
        if len(args) not in self.sig.functions[fun]:
            want = "/".join(map(str, self.sig.functions[fun]))
            raise FormulaError(f"{fun} takes {want} arguments, got {len(args)}", fpos)
        self.take(")")
        return App(fun, tuple(args))


def parse_sentence(text: str, cls: FraisseClass) -> Sentence:
    """Parse ``text`` against the signature of ``cls``."""
    p = _Parser(text, signature(cls))
    phi = p.sentence()
    tok, pos = p.peek()
    if tok is not None:
        raise FormulaError(f"trailing token {tok!r}", pos, ("end of input",))
    return phi


def to_text(phi: Sentence | Term) -> str:
    match phi:
        case Truth(v):
            return "true" if v else "false"
        case Const(x):
            return str(x)
        case App(f, args):
            return "(" + " ".join([f, *map(to_text, args)]) + ")"
        case Rel(r, args):
            return "(" + " ".join([r, *map(str, args)]) + ")"
        case Eq(l, r):
            return f"(= {to_text(l)} {to_text(r)})"
        case Not(a):
            return f"(not {to_text(a)})"
        case And(args):
            return "(" + " ".join(["and", *map(to_text, args)]) + ")"
        case Or(args):
            return "(" + " ".join(["or", *map(to_text, args)]) + ")"
    raise TypeError(phi)


def constants(phi: Sentence | Term) -> list[int]:
    """Constant labels in order of first occurrence."""
    seen: dict[int, None] = {}

    def walk(node) -> Iterator[int]:
        match node:
            case Const(x):
                yield x
            case Rel(_, args):
                yield from args
            case App(_, args) | And(args) | Or(args):
                for a in args:
                    yield from walk(a)
            case Eq(l, r):
                yield from walk(l)
                yield from walk(r)
            case Not(a):
                yield from walk(a)

    for x in walk(phi):
        seen.setdefault(x)
    return list(seen)


# -- evaluation -----------------------------------------------------------------


def _eval_term(cls: FraisseClass, S: Structure, t: Term) -> int:
    if isinstance(t, Const):
        return t.label
    vals = [_eval_term(cls, S, a) for a in t.args]
    if isinstance(cls, AbelianGroupClass):
        return cls.add(S, *vals) if t.fun == "+" else cls.neg(S, vals[0])
    if isinstance(cls, FiniteFieldClass):
        K = arithmetic(S)
        els = [element_of(S, v) for v in vals]
        if t.fun == "+":
            return label_of(S, K.add(*els))
        if t.fun == "*":
            return label_of(S, K.mul(*els))
        return label_of(S, K.neg(els[0]))
    raise ContractViolation(f"class {cls.class_id!r} has no function symbols")


def _atom(cls: FraisseClass, S: Structure, r: Rel) -> bool:
    x, y = r.args
    if x == y:
        return False  # every relation here is irreflexive and menu distances are positive
    if isinstance(cls, QMetricClass):
        return _menu_symbol(cls.dist(S, x, y)) == r.symbol
    return bool(cls.value(S, x, y))


def eval_sentence(cls: FraisseClass, S: Structure, phi: Sentence) -> bool:
    """Truth of ``phi`` in ``S``; every constant must be a label of ``S``."""
    cls.check(S)
    for x in constants(phi):
        if x not in S:
            raise ContractViolation(f"label {x} is outside the domain; truth is not determined")

    def ev(node: Sentence) -> bool:
        match node:
            case Truth(v):
                return v
            case Rel():
                return _atom(cls, S, node)
            case Eq(l, r):
                return _eval_term(cls, S, l) == _eval_term(cls, S, r)
            case Not(a):
                return not ev(a)
            case And(args):
                return all(ev(a) for a in args)
            case Or(args):
                return any(ev(a) for a in args)
        raise TypeError(node)

    return ev(phi)


# -- translation to and from basic opens ------------------------------------------------


def open_from_structure(cls: FraisseClass, B: Structure) -> Sentence:
    """A conjunction that holds exactly in the structures restricting to B on B.domain.

    Graphs list the edges, then the non-edges. Orders list one ``<`` atom per
    pair and metric spaces one ``d_r`` atom per pair; these already pin the
    pair, so no negative atoms are added.
    """
    if isinstance(cls, (AbelianGroupClass, FiniteFieldClass)):
        raise ContractViolation(f"class {cls.class_id!r} is not finite relational; "
                                "open_from_structure is unsupported")
    cls.require_member(B)
    pairs = list(combinations(B.domain, 2))
    if isinstance(cls, GraphClass):
        pos = [Rel("E", p) for p in pairs if cls.value(B, *p)]
        neg = [Not(Rel("E", p)) for p in pairs if not cls.value(B, *p)]
        atoms: list[Sentence] = pos + neg
    elif isinstance(cls, LinearOrderClass):
        atoms = [Rel("<", (x, y) if cls.value(B, x, y) else (y, x)) for x, y in pairs]
    elif isinstance(cls, QMetricClass):
        atoms = [Rel(_menu_symbol(cls.dist(B, x, y)), (x, y)) for x, y in pairs]
    else:
        raise ContractViolation(f"no translation for class {cls.class_id!r}")
    return atoms[0] if len(atoms) == 1 else And(tuple(atoms))


def structure_from_open(cls: FraisseClass, phi: Sentence, S: Structure) -> Structure:
    """The substructure of S generated by the constants of ``phi``; ``phi`` must hold in S."""
    consts = constants(phi)
    if not consts:
        raise ContractViolation("sentence has no constants; the generating set would be empty")
    if not eval_sentence(cls, S, phi):
        raise ContractViolation("sentence is false in the structure")
    return cls.substructure_generated(S, consts)
