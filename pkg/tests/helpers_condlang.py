"""Shared generators and the independent truth-table oracle for condlang tests."""

from __future__ import annotations

import itertools
import random

from epiplan.condlang import And, Atom, CondExpr, Not, Or, Truth

# All vocabulary atoms end with the same head noun so OR-list head-noun
# distribution is a no-op and generated strings round-trip exactly.
VOCAB = ["confirmed case", "suspected case", "clinically diagnosed case", "imported case"]

_TO_NUM = {Truth.YES: 1.0, Truth.NO: 0.0, Truth.UNKNOWN: 0.5}
_FROM_NUM = {1.0: Truth.YES, 0.0: Truth.NO, 0.5: Truth.UNKNOWN}


def oracle_eval(expr: CondExpr, assignment: dict[str, Truth]) -> Truth:
    """Kleene logic via the numeric min/max/complement formulation.

    Independent of the recursive case analysis in epiplan.condlang: encodes
    Yes/Unknown/No as 1/0.5/0 and uses And=min, Or=max, Not=1-x.
    """

    def num(e: CondExpr) -> float:
        if isinstance(e, Atom):
            return _TO_NUM[assignment.get(e.text, Truth.UNKNOWN)]
        if isinstance(e, Not):
            return 1.0 - num(e.child)
        if isinstance(e, And):
            return min(num(c) for c in e.children)
        if isinstance(e, Or):
            return max(num(c) for c in e.children)
        raise TypeError(e)

    return _FROM_NUM[num(expr)]


def all_assignments(atoms: list[str]) -> list[dict[str, Truth]]:
    """Every assignment of {Yes,No,Unknown} to the given atoms."""
    combos = itertools.product([Truth.YES, Truth.NO, Truth.UNKNOWN], repeat=len(atoms))
    return [dict(zip(atoms, combo)) for combo in combos]


def random_expr(rng: random.Random, atoms: list[str], depth: int = 3) -> CondExpr:
    """Random expression tree over the given atoms."""
    if depth == 0 or rng.random() < 0.4:
        return Atom(rng.choice(atoms))
    kind = rng.choice(["not", "and", "or"])
    if kind == "not":
        return Not(random_expr(rng, atoms, depth - 1))
    n = rng.randint(2, 3)
    children = tuple(random_expr(rng, atoms, depth - 1) for _ in range(n))
    return And(children) if kind == "and" else Or(children)


def random_expr_string(rng: random.Random, depth: int = 2) -> tuple[str, set[str]]:
    """Random surface string following the trigger grammar, plus its atom set.

    Varies separator spelling (OR / or / comma / ", or") and atom casing.
    """
    used: set[str] = set()

    def atom() -> str:
        text = rng.choice(VOCAB)
        used.add(text)
        words = text.split()
        styled = " ".join(w.upper() if rng.random() < 0.3 else w.title() if rng.random() < 0.5 else w for w in words)
        return styled if rng.random() < 0.8 else f"  {styled} "

    def primary(d: int) -> str:
        if d > 0 and rng.random() < 0.3:
            return f"({disj(d - 1)})"
        return atom()

    def neg(d: int) -> str:
        if rng.random() < 0.2:
            return f"NOT {primary(d)}" if rng.random() < 0.5 else f"not {primary(d)}"
        return primary(d)

    def conj(d: int) -> str:
        parts = [neg(d)]
        while rng.random() < 0.25:
            parts.append(neg(d))
        joiner = " AND " if rng.random() < 0.5 else " and "
        return joiner.join(parts)

    def disj(d: int) -> str:
        parts = [conj(d)]
        while rng.random() < 0.35:
            parts.append(conj(d))
        if len(parts) == 1:
            return parts[0]
        out = parts[0]
        for i, part in enumerate(parts[1:]):
            sep = rng.choice([" OR ", " or ", ", "])
            if i == len(parts) - 2 and rng.random() < 0.5:
                sep = ", or "
            out += sep + part
        return out

    return disj(depth), used
