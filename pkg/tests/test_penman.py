import random

import pytest

from amreager.graph import AmrGraph, Edge, GraphError, Node
from amreager.penman import PenmanError, canonical_penman, parse_penman, serialize_penman

from helpers import graphs_isomorphic, make_random_dag

BEG_TEXT = "(b / beg-01 :ARG0 (i / i) :ARG1 (y / you) :ARG2 (e / excuse-01 :ARG0 y :ARG1 i))"


def test_parse_small_graph_structure():
    g = parse_penman(BEG_TEXT)
    assert len(g.nodes) == 4
    assert len(g.edges) == 5
    assert g.top == "b"
    assert g.concept_of("b") == "beg-01"
    assert {e.label for e in g.children("b")} == {":ARG0", ":ARG1", ":ARG2"}
    # both pronouns are reached twice: once from beg-01 and once from excuse-01
    assert g.reentrant_nodes() == {"i", "y"}
    assert g.in_degree("i") == 2
    assert g.in_degree("y") == 2


def test_parse_constants_and_quoting():
    g = parse_penman('(c / city :name (n / name :op1 "New" :op2 "York") :quant 3 :polarity -)')
    constants = [n for n in g.nodes if n.is_constant]
    assert sorted(n.concept for n in constants) == ["-", "3", "New", "York"]
    text = serialize_penman(g)
    assert '"New"' in text and '"York"' in text
    assert " 3" in text and " -" in text and '"3"' not in text


def test_roundtrip_is_byte_identical_for_simple_graph():
    text = "(h / hello)"
    assert serialize_penman(parse_penman(text)) == text


def test_roundtrip_fig_text():
    g = parse_penman(BEG_TEXT)
    assert serialize_penman(g) == BEG_TEXT


def test_reentrant_reference_does_not_duplicate_node():
    g = parse_penman("(a / and :op1 (b / boy) :op2 b)")
    assert len(g.nodes) == 2
    assert [e for e in g.edges] == [Edge("a", ":op1", "b"), Edge("a", ":op2", "b")]


def test_forward_reference_resolves():
    g = parse_penman("(w / want-01 :ARG0 h :ARG1 (g / go-02 :ARG0 (h / he)))")
    assert g.in_degree("h") == 2


def test_unbalanced_parens_error_carries_position():
    with pytest.raises(PenmanError) as err:
        parse_penman("(a / alpha :mod (b / beta)")
    assert err.value.line == 1
    assert err.value.column > 0


def test_undefined_variable_reference_is_an_error():
    with pytest.raises(PenmanError, match="undefined variable"):
        parse_penman("(a / alpha :mod zz9)")


def test_duplicate_variable_definition_is_an_error():
    with pytest.raises(PenmanError, match="duplicate variable"):
        parse_penman("(a / alpha :mod (a / beta))")


def test_serialize_rejects_unreachable_nodes():
    g = AmrGraph(
        nodes=(Node("a", "alpha"), Node("b", "beta")),
        edges=(),
        top="a",
    )
    with pytest.raises(GraphError, match="unreachable"):
        serialize_penman(g)


def test_serialize_assigns_variables_when_missing():
    g = AmrGraph(
        nodes=(Node("x1", "run-02"), Node("x2", "dog"), Node("x3", "dog")),
        edges=(Edge("x1", ":ARG0", "x2"), Edge("x1", ":mod", "x3")),
        top="x1",
    )
    text = serialize_penman(g)
    assert text == "(r / run-02 :ARG0 (d / dog) :mod (d2 / dog))"


def test_canonical_form_ignores_variable_names():
    g1 = parse_penman("(a / and :op1 (b / boy) :op2 (g / girl))")
    g2 = parse_penman("(x / and :op1 (y / boy) :op2 (z / girl))")
    assert canonical_penman(g1) == canonical_penman(g2)
    g3 = parse_penman("(x / and :op1 (y / girl) :op2 (z / boy))")
    assert canonical_penman(g1) != canonical_penman(g3)


def test_roundtrip_random_graphs():
    rng = random.Random(20260813)
    for _ in range(1000):
        g = make_random_dag(rng)
        text = serialize_penman(g)
        back = parse_penman(text)
        assert graphs_isomorphic(g, back), text
        assert serialize_penman(back) == text
