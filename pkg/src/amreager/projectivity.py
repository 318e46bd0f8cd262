"""Projectivity of AMR edges with respect to a token alignment.

An edge is drawn between the tokens its endpoints align to; the artificial
root sits at position 0 and points at the graph's top node.  An edge is
projective when every node aligned strictly inside its token span has all
parents and children inside the span too (endpoints included).  Edges with
an unaligned endpoint are skipped.
"""

from __future__ import annotations

from typing import Iterable

from .graph import Alignment, AmrGraph, Edge, ROOT


def _position(graph: AmrGraph, alignment: Alignment, node_id: str) -> int | None:
    if node_id == ROOT:
        return 0
    return alignment.token_of(node_id)


def _neighbors(graph: AmrGraph, node_id: str) -> list[str]:
    ids = [e.src for e in graph.parents(node_id)]
    ids.extend(e.dst for e in graph.children(node_id))
    if node_id == graph.top:
        ids.append(ROOT)
    return ids


def edge_projective(graph: AmrGraph, alignment: Alignment, edge: Edge) -> bool | None:
    """True/False for aligned edges, None when an endpoint is unaligned.

    The virtual root edge can be tested by passing an edge whose source is
    the root marker.
    """
    pos_u = _position(graph, alignment, edge.src)
    pos_v = _position(graph, alignment, edge.dst)
    if pos_u is None or pos_v is None:
        return None
    lo, hi = min(pos_u, pos_v), max(pos_u, pos_v)
    span = {edge.src, edge.dst}
    inside = [
        n.id
        for n in graph.nodes
        if n.id not in span
        and (p := alignment.token_of(n.id)) is not None
        and lo < p < hi
    ]
    member = set(inside) | span
    for w in inside:
        for x in _neighbors(graph, w):
            if x in member:
                continue
            if _position(graph, alignment, x) is None:
                continue
            return False
    return True


def _virtual_root_edge(graph: AmrGraph) -> Edge | None:
    if graph.top is None:
        return None
    return Edge(ROOT, ":top", graph.top)


def corpus_stats(corpus: Iterable[tuple[AmrGraph, Alignment]]) -> dict:
    """Aggregate percentages over (graph, alignment) pairs.

    Reports non-projective edges, graphs containing one, reentrant edges
    (edges into nodes with in-degree >= 2) and graphs containing one, plus
    the raw counts behind them.  The virtual root edge participates in the
    projectivity check but is not counted as a corpus edge.
    """
    n_graphs = 0
    n_edges = 0
    checked = 0
    skipped = 0
    nonprojective = 0
    graphs_nonprojective = 0
    reentrant = 0
    graphs_reentrant = 0

    for graph, alignment in corpus:
        n_graphs += 1
        n_edges += len(graph.edges)
        graph_has_np = False
        for edge in graph.edges:
            verdict = edge_projective(graph, alignment, edge)
            if verdict is None:
                skipped += 1
                continue
            checked += 1
            if not verdict:
                nonprojective += 1
                graph_has_np = True
        if graph_has_np:
            graphs_nonprojective += 1
        targets = graph.reentrant_nodes()
        hits = sum(1 for e in graph.edges if e.dst in targets)
        reentrant += hits
        if hits:
            graphs_reentrant += 1

    def pct(part: int, whole: int) -> float:
        return 100.0 * part / whole if whole else 0.0

    return {
        "graphs": n_graphs,
        "edges": n_edges,
        "edges_checked": checked,
        "edges_skipped": skipped,
        "pct_nonprojective_edges": pct(nonprojective, checked),
        "pct_graphs_with_nonprojective": pct(graphs_nonprojective, n_graphs),
        "pct_reentrant_edges": pct(reentrant, n_edges),
        "pct_graphs_with_reentrancy": pct(graphs_reentrant, n_graphs),
    }
