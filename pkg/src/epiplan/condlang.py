"""Trigger-condition language: parsing and three-valued evaluation.

Knowledge-base records gate response actions on boolean conditions written
in prose ("Confirmed OR Suspected Case"). This module parses that prose into
an expression tree and evaluates it under Kleene three-valued logic, where a
condition point may be judged Yes, No, or Unknown.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Union


class Truth(Enum):
    """Three-valued verdict for a condition point."""

    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"

    @classmethod
    def from_text(cls, text: str) -> "Truth":
        t = text.strip().casefold()
        if t == "yes":
            return cls.YES
        if t == "no":
            return cls.NO
        return cls.UNKNOWN


def canonicalize(text: str) -> str:
    """Trim, collapse internal whitespace, and case-fold atom text."""
    return re.sub(r"\s+", " ", text.strip()).casefold()


@dataclass(frozen=True)
class Atom:
    text: str


@dataclass(frozen=True)
class Not:
    child: "CondExpr"


@dataclass(frozen=True)
class And:
    children: tuple["CondExpr", ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ValueError("And requires at least 2 children")


@dataclass(frozen=True)
class Or:
    children: tuple["CondExpr", ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ValueError("Or requires at least 2 children")


CondExpr = Union[Atom, Not, And, Or]

# Atom verdicts; missing keys read as Unknown during evaluation.
TruthAssignment = dict[str, Truth]


def make_assignment(verdicts: dict[str, Truth | str]) -> TruthAssignment:
    """Build an assignment with canonicalized keys from mixed input."""
    out: TruthAssignment = {}
    for key, value in verdicts.items():
        out[canonicalize(key)] = value if isinstance(value, Truth) else Truth.from_text(value)
    return out


class ParseResult(NamedTuple):
    expr: CondExpr
    degraded: bool


class _ParseError(Exception):
    pass


_KEYWORDS = {"and", "or", "not"}


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    for match in re.finditer(r"\(|\)|,|[^\s(),]+", text):
        piece = match.group(0)
        if piece == "(":
            tokens.append(("lparen", piece))
        elif piece == ")":
            tokens.append(("rparen", piece))
        elif piece == ",":
            tokens.append(("comma", piece))
        elif piece.casefold() in _KEYWORDS:
            tokens.append(("kw", piece.casefold()))
        else:
            tokens.append(("word", piece))
    return tokens


class _Parser:
    """Recursive-descent parser for the grammar:

    expr    := disj
    disj    := conj (("OR" | ",") conj)*        a trailing ", or" reads as OR
    conj    := neg ("AND" neg)*
    neg     := ["NOT"] primary
    primary := "(" expr ")" | atom-text

    OR-lists of bare atoms get head-noun distribution: earlier atoms that
    lack the final word of the last atom have it appended, so
    "Confirmed OR Suspected Case" yields "confirmed case" / "suspected case".
    Parenthesized atoms are never rewritten.
    """

    def __init__(self, tokens: list[tuple[str, str]]) -> None:
        self.tokens = tokens
        self.pos = 0
        self._last_was_bare = False

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise _ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def parse(self) -> CondExpr:
        expr = self.disj()
        if self.peek() is not None:
            raise _ParseError(f"trailing input at token {self.pos}")
        return expr

    def disj(self) -> CondExpr:
        items = [self.conj()]
        bare = [self._last_was_bare]
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok[0] == "comma":
                self.take()
                nxt = self.peek()
                if nxt is not None and nxt == ("kw", "or"):
                    self.take()
            elif tok == ("kw", "or"):
                self.take()
            else:
                break
            items.append(self.conj())
            bare.append(self._last_was_bare)
        if len(items) == 1:
            return items[0]
        return Or(tuple(self._distribute_head_noun(items, bare)))

    def conj(self) -> CondExpr:
        items = [self.neg()]
        while self.peek() == ("kw", "and"):
            self.take()
            items.append(self.neg())
        if len(items) == 1:
            return items[0]
        return And(tuple(items))

    def neg(self) -> CondExpr:
        if self.peek() == ("kw", "not"):
            self.take()
            child = self.primary()
            self._last_was_bare = False
            return Not(child)
        return self.primary()

    def primary(self) -> CondExpr:
        tok = self.peek()
        if tok is None:
            raise _ParseError("missing operand")
        if tok[0] == "lparen":
            self.take()
            expr = self.disj()
            if self.peek() is None or self.take()[0] != "rparen":
                raise _ParseError("unbalanced parenthesis")
            self._last_was_bare = False
            return expr
        words: list[str] = []
        while self.peek() is not None and self.peek()[0] == "word":
            words.append(self.take()[1])
        if not words:
            raise _ParseError(f"expected atom text, got {tok}")
        self._last_was_bare = True
        return Atom(canonicalize(" ".join(words)))

    @staticmethod
    def _distribute_head_noun(items: list[CondExpr], bare: list[bool]) -> list[CondExpr]:
        last = items[-1]
        if not (bare[-1] and isinstance(last, Atom)):
            return items
        head = last.text.rsplit(" ", 1)[-1]
        out: list[CondExpr] = []
        for item, is_bare in zip(items, bare):
            lacks_head = isinstance(item, Atom) and item.text.rsplit(" ", 1)[-1] != head
            if item is not last and is_bare and lacks_head:
                out.append(Atom(f"{item.text} {head}"))
            else:
                out.append(item)
        return out


def parse_condition(text: str) -> ParseResult:
    """Parse trigger-condition prose into an expression tree.

    Never fails on nonempty input: text outside the grammar degrades to a
    single Atom of the whole canonicalized string, with ``degraded=True`` so
    knowledge-base validators can surface it.
    """
    if not text or not text.strip():
        raise ValueError("condition text must be nonempty")
    try:
        expr = _Parser(_tokenize(text)).parse()
        return ParseResult(expr, False)
    except (_ParseError, ValueError):
        return ParseResult(Atom(canonicalize(text)), True)


def evaluate_condition(expr: CondExpr, assignment: TruthAssignment) -> Truth:
    """Evaluate under Kleene three-valued logic; missing atoms read Unknown."""
    if isinstance(expr, Atom):
        return assignment.get(expr.text, Truth.UNKNOWN)
    if isinstance(expr, Not):
        inner = evaluate_condition(expr.child, assignment)
        if inner is Truth.YES:
            return Truth.NO
        if inner is Truth.NO:
            return Truth.YES
        return Truth.UNKNOWN
    if isinstance(expr, And):
        verdicts = [evaluate_condition(c, assignment) for c in expr.children]
        if any(v is Truth.NO for v in verdicts):
            return Truth.NO
        if all(v is Truth.YES for v in verdicts):
            return Truth.YES
        return Truth.UNKNOWN
    if isinstance(expr, Or):
        verdicts = [evaluate_condition(c, assignment) for c in expr.children]
        if any(v is Truth.YES for v in verdicts):
            return Truth.YES
        if all(v is Truth.NO for v in verdicts):
            return Truth.NO
        return Truth.UNKNOWN
    raise TypeError(f"not a CondExpr: {expr!r}")


def collect_atoms(exprs: list[CondExpr]) -> list[str]:
    """All atom texts across expressions, first-occurrence order, deduplicated."""
    seen: dict[str, None] = {}

    def walk(expr: CondExpr) -> None:
        if isinstance(expr, Atom):
            seen.setdefault(expr.text, None)
        elif isinstance(expr, Not):
            walk(expr.child)
        else:
            for child in expr.children:
                walk(child)

    for expr in exprs:
        walk(expr)
    return list(seen)


def canonical_text(expr: CondExpr) -> str:
    """Render an expression so that re-parsing reproduces it exactly.

    Operands are parenthesized, which shields atoms from head-noun
    distribution on the way back in.
    """
    if isinstance(expr, Atom):
        return expr.text
    if isinstance(expr, Not):
        return f"NOT ({canonical_text(expr.child)})"
    op = " AND " if isinstance(expr, And) else " OR "
    return op.join(f"({canonical_text(c)})" for c in expr.children)


def expr_to_json(expr: CondExpr) -> dict:
    """Serialize to the canonical JSON tree shape."""
    if isinstance(expr, Atom):
        return {"op": "atom", "text": expr.text}
    if isinstance(expr, Not):
        return {"op": "not", "children": [expr_to_json(expr.child)]}
    op = "and" if isinstance(expr, And) else "or"
    return {"op": op, "children": [expr_to_json(c) for c in expr.children]}


def expr_from_json(doc: dict) -> CondExpr:
    """Rebuild an expression from its JSON tree."""
    op = doc["op"]
    if op == "atom":
        return Atom(doc["text"])
    if op == "not":
        (child,) = doc["children"]
        return Not(expr_from_json(child))
    children = tuple(expr_from_json(c) for c in doc["children"])
    if op == "and":
        return And(children)
    if op == "or":
        return Or(children)
    raise ValueError(f"unknown op {op!r} in {json.dumps(doc)[:80]}")
