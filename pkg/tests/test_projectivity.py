import random

from amreager.graph import Alignment, Edge, ROOT
from amreager.penman import parse_penman
from amreager.projectivity import corpus_stats, edge_projective

from helpers import projective_by_crossing, make_random_dag, random_injective_alignment

BEG_TEXT = "(b / beg-01 :ARG0 (i / i) :ARG1 (y / you) :ARG2 (e / excuse-01 :ARG0 y :ARG1 i))"
# I beg you to excuse me: beg->2, i->1, you->3, excuse->4
BEG_ALIGN = Alignment({"i": 1, "b": 2, "y": 3, "e": 4})


def test_known_nonprojective_edge():
    g = parse_penman(BEG_TEXT)
    # the arc from excuse-01 back to i spans the root attachment of beg-01
    assert edge_projective(g, BEG_ALIGN, Edge("e", ":ARG1", "i")) is False


def test_known_projective_edges():
    g = parse_penman(BEG_TEXT)
    assert edge_projective(g, BEG_ALIGN, Edge("b", ":ARG0", "i")) is True
    assert edge_projective(g, BEG_ALIGN, Edge("b", ":ARG1", "y")) is True
    assert edge_projective(g, BEG_ALIGN, Edge("b", ":ARG2", "e")) is True


def test_unaligned_endpoint_is_skipped():
    g = parse_penman(BEG_TEXT)
    partial = Alignment({"b": 2, "y": 3, "e": 4})
    assert edge_projective(g, partial, Edge("b", ":ARG0", "i")) is None


def test_agreement_with_crossing_arcs_check():
    rng = random.Random(20260813)
    checked = 0
    for _ in range(500):
        g = make_random_dag(rng, max_nodes=7, constants=False)
        al = random_injective_alignment(rng, g, n_tokens=10)
        for e in g.edges:
            expected = projective_by_crossing(g, al, e)
            got = edge_projective(g, al, e)
            assert got == expected, (e, al.node_to_token)
            checked += 1
    assert checked > 500


def test_corpus_stats_counts():
    g1 = parse_penman(BEG_TEXT)
    g2 = parse_penman("(a / and :op1 (b / boy) :op2 (g / girl))")
    al2 = Alignment({"b": 2, "a": 3, "g": 5})
    stats = corpus_stats([(g1, BEG_ALIGN), (g2, al2)])
    assert stats["graphs"] == 2
    assert stats["edges"] == 7
    # g1: i and y both have two parents, so four edges point at reentrant nodes
    assert stats["pct_reentrant_edges"] == 100.0 * 4 / 7
    assert stats["pct_graphs_with_reentrancy"] == 50.0
    assert stats["pct_graphs_with_nonprojective"] == 50.0
    assert stats["edges_skipped"] == 0
    assert 0.0 < stats["pct_nonprojective_edges"] < 100.0


def test_corpus_stats_empty_corpus():
    stats = corpus_stats([])
    assert stats["graphs"] == 0
    assert stats["pct_nonprojective_edges"] == 0.0
