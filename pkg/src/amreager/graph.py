"""Core graph types for AMR parsing and evaluation.

An AMR is a rooted, labeled, directed acyclic graph.  Nodes carry either a
concept (English word, PropBank frameset like ``beg-01``, or an entity type)
or a constant value (quantities, ``-``, quoted strings).  Edges carry role
labels like ``:ARG0`` or ``:mod``.  The designated root node is stored on the
``top`` field rather than as an edge.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

# Marker for the artificial root that sits at the bottom of the parser stack.
# It is not a graph node; it only appears in transition-system edge sets.
ROOT = "∘"

TOP_LABEL = ":top"

EMPTY_PARSE = "(a / amr-empty)"

_FRAME_RE = re.compile(r"^(.+)-(\d{2,3})$")
_NUMBER_RE = re.compile(r"^[+-]?\d+(\.\d+)?$")

# Constant values that are written without quotes.
BARE_CONSTANTS = {"-", "+", "interrogative", "expressive", "imperative"}


def is_frame(concept: str) -> bool:
    """True for PropBank framesets such as ``go-02`` or ``look-over-06``."""
    return bool(_FRAME_RE.match(concept))


def strip_sense(concept: str) -> str:
    """Remove a trailing ``-NN`` sense suffix: ``beg-01`` becomes ``beg``."""
    m = _FRAME_RE.match(concept)
    return m.group(1) if m else concept


def is_number(value: str) -> bool:
    return bool(_NUMBER_RE.match(value))


@dataclass(frozen=True)
class Node:
    """A graph node.

    ``id`` is unique within a graph and opaque.  For graphs read from text
    the id of a concept node is its variable; constants get generated ids.
    ``is_constant`` nodes hold a value in ``concept`` and may not have
    outgoing edges.
    """

    id: str
    concept: str
    variable: str | None = None
    is_constant: bool = False


class Edge(NamedTuple):
    src: str
    label: str
    dst: str


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class AmrGraph:
    """Immutable AMR graph: node tuple, edge tuple and an optional top node.

    Edge order is meaningful: serialization walks children in insertion
    order, which keeps round trips deterministic.
    """

    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()
    top: str | None = None

    @cached_property
    def _by_id(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _out(self) -> dict[str, list[Edge]]:
        out: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            out[e.src].append(e)
        return out

    @cached_property
    def _in(self) -> dict[str, list[Edge]]:
        inc: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            inc[e.dst].append(e)
        return inc

    @property
    def is_empty(self) -> bool:
        return not self.nodes

    def node(self, node_id: str) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise GraphError(f"unknown node id: {node_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._by_id

    def concept_of(self, node_id: str) -> str:
        return self.node(node_id).concept

    def children(self, node_id: str) -> list[Edge]:
        return list(self._out.get(node_id, ()))

    def parents(self, node_id: str) -> list[Edge]:
        return list(self._in.get(node_id, ()))

    def in_degree(self, node_id: str) -> int:
        return len(self._in.get(node_id, ()))

    def reentrant_nodes(self) -> set[str]:
        """Ids of nodes with at least two incoming edges."""
        return {n.id for n in self.nodes if self.in_degree(n.id) >= 2}

    def reachable_from(self, node_id: str) -> set[str]:
        seen: set[str] = set()
        stack = [node_id]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            for e in self._out.get(cur, ()):
                stack.append(e.dst)
        return seen

    def validate(self) -> None:
        """Check structural invariants; raise GraphError on the first failure.

        Invariants: unique node ids, unique variables, no duplicate edges,
        edge endpoints exist, constants have no outgoing edges, and the
        non-constant part of the graph is acyclic.
        """
        seen_ids: set[str] = set()
        seen_vars: set[str] = set()
        for n in self.nodes:
            if n.id in seen_ids:
                raise GraphError(f"duplicate node id: {n.id!r}")
            seen_ids.add(n.id)
            if n.variable is not None:
                if n.variable in seen_vars:
                    raise GraphError(f"duplicate variable: {n.variable!r}")
                seen_vars.add(n.variable)
        seen_edges: set[Edge] = set()
        for e in self.edges:
            if e in seen_edges:
                raise GraphError(f"duplicate edge: {e}")
            seen_edges.add(e)
            if e.src not in seen_ids or e.dst not in seen_ids:
                raise GraphError(f"edge endpoint missing from graph: {e}")
            if self.node(e.src).is_constant:
                raise GraphError(f"constant node {e.src!r} has outgoing edge {e}")
        if self.top is not None and self.top not in seen_ids:
            raise GraphError(f"top {self.top!r} is not a node")
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        state: dict[str, int] = {}  # 1 = in progress, 2 = done

        for start in self._by_id:
            if state.get(start):
                continue
            stack: list[tuple[str, Iterable[Edge]]] = [(start, iter(self._out.get(start, ())))]
            state[start] = 1
            while stack:
                node_id, it = stack[-1]
                advanced = False
                for e in it:
                    if state.get(e.dst) == 1:
                        raise GraphError(f"cycle through node {e.dst!r}")
                    if not state.get(e.dst):
                        state[e.dst] = 1
                        stack.append((e.dst, iter(self._out.get(e.dst, ()))))
                        advanced = True
                        break
                if not advanced:
                    state[node_id] = 2
                    stack.pop()


@dataclass(frozen=True)
class Fragment:
    """A small graph introduced by one token, plus its designated root.

    The empty fragment (function words like "the" introduce no nodes) has an
    empty graph and no root; it is distinct from any one-node fragment.
    """

    graph: AmrGraph = field(default_factory=AmrGraph)
    root: str | None = None

    @property
    def is_empty(self) -> bool:
        return self.graph.is_empty

    def __post_init__(self) -> None:
        if self.graph.is_empty != (self.root is None):
            raise GraphError("fragment root must be set iff the fragment is non-empty")
        if self.root is not None and not self.graph.has_node(self.root):
            raise GraphError(f"fragment root {self.root!r} is not a fragment node")


EMPTY_FRAGMENT = Fragment()


@dataclass(frozen=True)
class Sentence:
    """Tokenized sentence with optional annotation layers.

    ``deps`` holds (head, dependent, label) triples with 1-based token
    indices; head 0 marks the syntactic root.
    """

    tokens: tuple[str, ...]
    lemmas: tuple[str, ...] = ()
    pos: tuple[str, ...] = ()
    ner: tuple[str, ...] = ()
    deps: tuple[tuple[int, int, str], ...] = ()

    def __post_init__(self) -> None:
        n = len(self.tokens)
        for name in ("lemmas", "pos", "ner"):
            layer = getattr(self, name)
            if layer and len(layer) != n:
                raise ValueError(f"{name} has {len(layer)} entries for {n} tokens")
        for head, dep, _ in self.deps:
            if not (0 <= head <= n) or not (1 <= dep <= n):
                raise ValueError(f"dependency ({head}, {dep}) out of range for {n} tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    @cached_property
    def _dep_index(self) -> dict[tuple[int, int], str]:
        return {(h, d): label for h, d, label in self.deps}

    def dep_label(self, head: int, dependent: int) -> str | None:
        """Label of the dependency arc head -> dependent, if present."""
        return self._dep_index.get((head, dependent))


@dataclass(frozen=True)
class Alignment:
    """Mapping from graph node ids to 1-based token indices."""

    node_to_token: dict[str, int] = field(default_factory=dict)

    def token_of(self, node_id: str) -> int | None:
        return self.node_to_token.get(node_id)

    def nodes_at(self, token_index: int) -> list[str]:
        """Node ids aligned to a token, in insertion order."""
        return [n for n, t in self.node_to_token.items() if t == token_index]

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.node_to_token

    def __len__(self) -> int:
        return len(self.node_to_token)
