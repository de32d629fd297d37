"""Parsing, serialization and the basic object model."""

import pytest

from omq import (
    Atom,
    ConjunctiveQuery,
    DataInstance,
    Eq,
    NdlClause,
    NdlQuery,
    ParseError,
    parse_cq,
    parse_data,
    parse_ndl,
    parse_ontology,
    serialize_cq,
    serialize_data,
    serialize_ndl,
    serialize_ontology,
)

from helpers import fixture_text


# ---------------------------------------------------------------------------
# Ontologies
# ---------------------------------------------------------------------------


def test_ontology_round_trip():
    text = fixture_text("zoo.owl")
    onto = parse_ontology(text)
    again = parse_ontology(serialize_ontology(onto))
    assert set(onto.axioms) == set(again.axioms)
    assert len(onto.axioms) == 14


def test_ontology_axiom_forms():
    onto = parse_ontology(
        """
        # a comment line
        A SubClassOf exists R
        exists inv R SubClassOf B
        R SubPropertyOf inv S
        reflexive T
        irreflexive R
        A DisjointWith B
        R DisjointWith S
        """
    )
    assert len(onto.axioms) == 7
    again = parse_ontology(serialize_ontology(onto))
    assert set(again.axioms) == set(onto.axioms)


def test_ontology_bad_line_raises():
    with pytest.raises(ParseError):
        parse_ontology("A ImpliedBy B")


# ---------------------------------------------------------------------------
# Conjunctive queries
# ---------------------------------------------------------------------------


def test_cq_parse_and_round_trip():
    cq = parse_cq("q(x,y) :- R(x,z), S(z,y), A(z).")
    assert cq.answer_vars == ("x", "y")
    assert cq.variables == {"x", "y", "z"}
    assert len(cq.atoms) == 3
    assert parse_cq(serialize_cq(cq)) == cq


def test_cq_boolean():
    cq = parse_cq("q() :- R(x,y).")
    assert cq.answer_vars == ()
    assert cq.existential_vars == {"x", "y"}


def test_cq_requires_trailing_dot():
    with pytest.raises(ParseError):
        parse_cq("q(x) :- A(x)")


def test_cq_answer_var_must_occur():
    with pytest.raises((ParseError, ValueError)):
        parse_cq("q(x,w) :- R(x,y).")


# ---------------------------------------------------------------------------
# Data instances
# ---------------------------------------------------------------------------


def test_data_round_trip_and_individuals():
    data = parse_data(
        """
        A(a).
        B(b).
        R(a,b).
        S(b,c).
        """
    )
    assert data.individuals == {"a", "b", "c"}
    assert ("A", "a") in data.unary_facts
    assert ("R", "a", "b") in data.binary_facts
    again = parse_data(serialize_data(data))
    assert again.unary_facts == data.unary_facts
    assert again.binary_facts == data.binary_facts


def test_data_add():
    data = DataInstance(set(), set())
    data.add(Atom("A", ("a",)))
    data.add(Atom("R", ("a", "b")))
    assert data.individuals == {"a", "b"}


# ---------------------------------------------------------------------------
# NDL programs
# ---------------------------------------------------------------------------


def test_ndl_round_trip_preserves_goal_params_and_clauses():
    ndl = parse_ndl(fixture_text("zoo_ucq9.ndl"))
    assert ndl.goal_pred == "G"
    assert ndl.goal_arity == 2
    assert len(ndl.clauses) == 9
    again = parse_ndl(serialize_ndl(ndl))
    assert again.goal_pred == ndl.goal_pred
    assert set(again.clauses) == set(ndl.clauses)


def test_ndl_equality_items():
    ndl = parse_ndl("% goal: G/1\nG(x) :- A(x), x = y, B(y).\n")
    clause = ndl.clauses[0]
    assert clause.body_eqs == (Eq("x", "y"),)
    assert {a.pred for a in clause.body_atoms} == {"A", "B"}
    assert parse_ndl(serialize_ndl(ndl)).clauses == ndl.clauses


def test_ndl_missing_goal_header():
    with pytest.raises(ParseError):
        parse_ndl("G(x) :- A(x).\n")


def test_ndl_conflicting_arities():
    with pytest.raises(ParseError):
        parse_ndl("% goal: G/1\nG(x) :- A(x), A(x,y).\n")


def test_ndl_head_vars_must_be_bound():
    with pytest.raises((ParseError, ValueError)):
        parse_ndl("% goal: G/2\nG(x,y) :- A(x).\n")
    with pytest.raises(ValueError):
        NdlClause(Atom("G", ("x", "y")), (Atom("A", ("x",)),))


def test_ndl_predicate_views():
    ndl = NdlQuery(
        (
            NdlClause(Atom("G", ("x",)), (Atom("I", ("x",)), Atom("A", ("x",)))),
            NdlClause(Atom("I", ("x",)), (Atom("R", ("x", "y")),)),
        ),
        "G",
        1,
    )
    assert ndl.idb_predicates == {"G", "I"}
    assert ndl.edb_predicates == {"A", "R"}
    assert ndl.arity_of("R") == 2
    assert [c.head.pred for c in ndl.clauses_for("I")] == ["I"]
