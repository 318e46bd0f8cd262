"""Token-to-node alignments and the graph fragments they induce.

Alignments use the common span notation ``start-end|addr(+addr)*`` where
``start-end`` is a 0-based token range and each ``addr`` is a dotted path to
a node in the serialized graph: ``0`` is the top node, ``0.1`` the second
child slot of the top node, and so on, counting child slots in edge order.
Internally every aligned node maps to the 1-based index of the first token
of its span.
"""

from __future__ import annotations

import logging
import re

from .graph import Alignment, AmrGraph, EMPTY_FRAGMENT, Fragment

log = logging.getLogger(__name__)

_SPAN_RE = re.compile(r"^(\d+)-(\d+)\|(.+)$")


class AlignmentError(ValueError):
    pass


def node_addresses(graph: AmrGraph) -> dict[str, str]:
    """Dotted address of each node's first occurrence in the graph's tree."""
    addresses: dict[str, str] = {}
    if graph.top is None:
        return addresses
    addresses[graph.top] = "0"
    stack = [(graph.top, "0")]
    while stack:
        node_id, addr = stack.pop()
        for slot, e in enumerate(graph.children(node_id)):
            child_addr = f"{addr}.{slot}"
            if e.dst not in addresses:
                addresses[e.dst] = child_addr
                stack.append((e.dst, child_addr))
    return addresses


def _resolve_address(graph: AmrGraph, addr: str) -> str:
    parts = addr.split(".")
    if parts[0] != "0" or graph.top is None:
        raise AlignmentError(f"address {addr!r} does not start at the top node")
    current = graph.top
    for part in parts[1:]:
        children = graph.children(current)
        try:
            slot = int(part)
        except ValueError:
            raise AlignmentError(f"bad address component {part!r} in {addr!r}") from None
        if not (0 <= slot < len(children)):
            raise AlignmentError(
                f"address {addr!r}: node {current!r} has {len(children)} children, wanted slot {slot}"
            )
        current = children[slot].dst
    return current


def parse_alignments(text: str, graph: AmrGraph) -> Alignment:
    """Parse an alignment line against the graph it annotates."""
    mapping: dict[str, int] = {}
    for chunk in text.split():
        m = _SPAN_RE.match(chunk)
        if not m:
            raise AlignmentError(f"malformed alignment span {chunk!r}")
        start, end = int(m.group(1)), int(m.group(2))
        if end <= start:
            raise AlignmentError(f"empty alignment span {chunk!r}")
        token_index = start + 1  # 1-based index of the first token in the span
        for addr in m.group(3).split("+"):
            node_id = _resolve_address(graph, addr)
            mapping[node_id] = token_index
    return Alignment(mapping)


def format_alignments(alignment: Alignment, graph: AmrGraph) -> str:
    """Serialize an alignment as single-token spans, ordered by token."""
    addresses = node_addresses(graph)
    by_token: dict[int, list[str]] = {}
    for node_id, token in alignment.node_to_token.items():
        if node_id not in addresses:
            raise AlignmentError(f"aligned node {node_id!r} is unreachable from top")
        by_token.setdefault(token, []).append(addresses[node_id])
    chunks = []
    for token in sorted(by_token):
        chunks.append(f"{token - 1}-{token}|{'+'.join(sorted(by_token[token]))}")
    return " ".join(chunks)


def token_fragment(graph: AmrGraph, alignment: Alignment, token_index: int) -> Fragment:
    """Subgraph induced by the nodes aligned to one token.

    The fragment root is the unique node without a parent inside the
    fragment; if several nodes qualify the first in graph node order wins
    and a warning is logged.  Tokens aligning no nodes give the empty
    fragment.
    """
    member_ids = [n.id for n in graph.nodes if alignment.token_of(n.id) == token_index]
    if not member_ids:
        return EMPTY_FRAGMENT
    members = set(member_ids)
    edges = tuple(e for e in graph.edges if e.src in members and e.dst in members)
    nodes = tuple(graph.node(i) for i in member_ids)
    with_parent = {e.dst for e in edges}
    roots = [i for i in member_ids if i not in with_parent]
    if not roots:
        raise AlignmentError(
            f"fragment for token {token_index} has no root (cycle among {sorted(members)})"
        )
    if len(roots) > 1:
        log.warning(
            "fragment for token %d has %d candidate roots %s; using %r",
            token_index,
            len(roots),
            roots,
            roots[0],
        )
    sub = AmrGraph(nodes=nodes, edges=edges, top=roots[0])
    return Fragment(graph=sub, root=roots[0])
