from __future__ import annotations

import random

import pytest

from epiplan.condlang import (
    And,
    Atom,
    Not,
    Or,
    Truth,
    canonical_text,
    canonicalize,
    collect_atoms,
    evaluate_condition,
    expr_from_json,
    expr_to_json,
    make_assignment,
    parse_condition,
)
from helpers_condlang import VOCAB, all_assignments, oracle_eval, random_expr, random_expr_string


class TestParse:
    def test_single_atom(self):
        result = parse_condition("Confirmed Case")
        assert result.expr == Atom("confirmed case")
        assert not result.degraded

    def test_or_with_head_noun_distribution(self):
        result = parse_condition("Confirmed OR Suspected Case")
        assert result.expr == Or((Atom("confirmed case"), Atom("suspected case")))
        assert not result.degraded

    def test_comma_or_list_of_three(self):
        result = parse_condition("Confirmed, Suspected, or Clinically Diagnosed Case")
        assert result.expr == Or(
            (Atom("confirmed case"), Atom("suspected case"), Atom("clinically diagnosed case"))
        )

    def test_and(self):
        result = parse_condition("Confirmed Case AND Local Transmission")
        assert result.expr == And((Atom("confirmed case"), Atom("local transmission")))

    def test_not_and_parens(self):
        result = parse_condition("NOT (Confirmed OR Suspected Case)")
        assert result.expr == Not(Or((Atom("confirmed case"), Atom("suspected case"))))

    def test_precedence_and_binds_tighter(self):
        result = parse_condition("A Case OR B Case AND C Case")
        assert result.expr == Or((Atom("a case"), And((Atom("b case"), Atom("c case")))))

    def test_canonicalization_of_atom_text(self):
        result = parse_condition("  CONFIRMED    Case  ")
        assert result.expr == Atom("confirmed case")

    def test_parenthesized_atoms_not_rewritten(self):
        result = parse_condition("(High Aedes Density) OR (Gene Sequencing Results Received)")
        assert result.expr == Or(
            (Atom("high aedes density"), Atom("gene sequencing results received"))
        )

    @pytest.mark.parametrize("text", ["((Confirmed Case", "Confirmed Case OR", "OR Confirmed", "( )"])
    def test_unparseable_degrades_to_whole_atom(self, text):
        result = parse_condition(text)
        assert result.degraded
        assert result.expr == Atom(canonicalize(text))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            parse_condition("   ")

    def test_parse_deterministic(self):
        a = parse_condition("Confirmed, Suspected, or Clinically Diagnosed Case")
        b = parse_condition("Confirmed, Suspected, or Clinically Diagnosed Case")
        assert a == b

    def test_idempotent_on_canonical_form(self):
        rng = random.Random(7)
        for _ in range(100):
            expr = random_expr(rng, VOCAB)
            rendered = canonical_text(expr)
            reparsed = parse_condition(rendered)
            assert not reparsed.degraded
            assert reparsed.expr == expr


class TestEvaluate:
    def test_kleene_disjunction_with_unknown(self):
        expr = Or((Atom("a"), Atom("b")))
        assignment = make_assignment({"a": Truth.YES, "b": Truth.UNKNOWN})
        assert evaluate_condition(expr, assignment) is Truth.YES

    def test_kleene_conjunction_with_unknown(self):
        expr = And((Atom("a"), Atom("b")))
        assignment = make_assignment({"a": Truth.YES, "b": Truth.UNKNOWN})
        assert evaluate_condition(expr, assignment) is Truth.UNKNOWN

    def test_not_swaps_and_preserves_unknown(self):
        assert evaluate_condition(Not(Atom("a")), {"a": Truth.YES}) is Truth.NO
        assert evaluate_condition(Not(Atom("a")), {"a": Truth.NO}) is Truth.YES
        assert evaluate_condition(Not(Atom("a")), {}) is Truth.UNKNOWN

    def test_missing_atom_reads_unknown(self):
        assert evaluate_condition(Atom("nowhere"), {}) is Truth.UNKNOWN

    def test_matches_oracle_on_random_expressions(self):
        rng = random.Random(42)
        atoms = VOCAB[:3]
        for _ in range(60):
            expr = random_expr(rng, atoms)
            for assignment in all_assignments(atoms):
                assert evaluate_condition(expr, assignment) is oracle_eval(expr, assignment)

    def test_monotone_under_refinement(self):
        # Resolving an Unknown atom to Yes or No never flips Yes <-> No.
        rng = random.Random(9)
        atoms = VOCAB[:3]
        for _ in range(40):
            expr = random_expr(rng, atoms)
            for assignment in all_assignments(atoms):
                before = evaluate_condition(expr, assignment)
                if before is Truth.UNKNOWN:
                    continue
                for atom, verdict in assignment.items():
                    if verdict is not Truth.UNKNOWN:
                        continue
                    for refined in (Truth.YES, Truth.NO):
                        after = evaluate_condition(expr, {**assignment, atom: refined})
                        assert after in (before, Truth.UNKNOWN) or after is before
                        assert not (before is Truth.YES and after is Truth.NO)
                        assert not (before is Truth.NO and after is Truth.YES)


class TestCollectAtoms:
    def test_dedup_preserves_first_occurrence_order(self):
        exprs = [
            Or((Atom("a"), Atom("b"))),
            And((Atom("b"), Atom("c"))),
        ]
        assert collect_atoms(exprs) == ["a", "b", "c"]

    def test_roundtrip_against_generator(self):
        rng = random.Random(13)
        for _ in range(150):
            text, used = random_expr_string(rng)
            result = parse_condition(text)
            assert not result.degraded, text
            assert set(collect_atoms([result.expr])) == used, text


class TestSerialization:
    def test_json_roundtrip(self):
        rng = random.Random(3)
        for _ in range(80):
            expr = random_expr(rng, VOCAB)
            assert expr_from_json(expr_to_json(expr)) == expr

    def test_json_shape(self):
        expr = Or((Atom("confirmed case"), Not(Atom("suspected case"))))
        assert expr_to_json(expr) == {
            "op": "or",
            "children": [
                {"op": "atom", "text": "confirmed case"},
                {"op": "not", "children": [{"op": "atom", "text": "suspected case"}]},
            ],
        }
