"""The shift-reduce transition system that builds AMR graphs left to right.

A configuration holds a stack of graph nodes (with an artificial root at the
bottom), a buffer of not-yet-consumed token indices, and the set of edges
built so far.  Four transitions move the parser along:

* Shift: consume the first buffer token; if its fragment is non-empty, merge
  the fragment into the partial graph and push the fragment root.
* LArc(label): add an edge from the stack top to the node below it and pop
  that lower node.
* RArc(label): add an edge from the node below the top to the top; nothing
  is popped, so the top can still collect children.
* Reduce: pop the stack top, optionally adding one reentrant edge from the
  most recently attached sibling of the popped node.

Every node acquires at most one parent per arc kind (LArc, RArc, reentrant
Reduce), which caps in-degree at three and keeps the number of transitions
linear in sentence length.  Configurations are immutable; ``apply`` returns
a fresh configuration and raises on any illegal request.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable

from .graph import AmrGraph, Edge, Fragment, Node, ROOT, Sentence, TOP_LABEL

SHIFT = "Shift"
LARC = "LArc"
RARC = "RArc"
REDUCE = "Reduce"


class TransitionError(ValueError):
    pass


@dataclass(frozen=True)
class Shift:
    fragment: Fragment

    kind = SHIFT


@dataclass(frozen=True)
class LArc:
    label: str

    kind = LARC


@dataclass(frozen=True)
class RArc:
    label: str

    kind = RARC


@dataclass(frozen=True)
class Reduce:
    # (sibling node id, label) for the optional reentrant edge
    reentrant: tuple[str, str] | None = None

    kind = REDUCE


Transition = Shift | LArc | RArc | Reduce


@dataclass(frozen=True)
class _NodeInfo:
    token: int
    depth: int
    seq: int
    pushed: bool
    # (other node id, label, kind, seq); kind is "larc"/"rarc"/"reduce"/"fragment"
    parents: tuple[tuple[str, str, str, int], ...] = ()
    children: tuple[tuple[str, str, str, int], ...] = ()


_ROOT_INFO = _NodeInfo(token=0, depth=0, seq=-1, pushed=True)


@dataclass(frozen=True, eq=False)
class Configuration:
    """Immutable parser state over one sentence."""

    sentence: Sentence
    stack: tuple[str, ...]
    buffer: tuple[int, ...]
    edges: tuple[Edge, ...]
    nodes: tuple[Node, ...]
    fragment_edges: tuple[Edge, ...]
    step: int = 0
    _info: dict[str, _NodeInfo] = field(default_factory=dict)

    # -- inspection ------------------------------------------------------

    def sigma(self, depth: int = 0) -> str | None:
        """Stack element counting from the top; sigma(0) is the top."""
        if len(self.stack) <= depth:
            return None
        return self.stack[-1 - depth]

    def beta(self, offset: int = 0) -> int | None:
        if len(self.buffer) <= offset:
            return None
        return self.buffer[offset]

    @cached_property
    def _node_by_id(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    def node(self, node_id: str) -> Node:
        return self._node_by_id[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._node_by_id

    def concept_of(self, node_id: str) -> str:
        return ROOT if node_id == ROOT else self._node_by_id[node_id].concept

    def token_of(self, node_id: str) -> int:
        return self._info[node_id].token

    def depth_of(self, node_id: str) -> int:
        return self._info[node_id].depth

    def parents_of(self, node_id: str) -> tuple[tuple[str, str, str, int], ...]:
        return self._info[node_id].parents

    def children_of(self, node_id: str) -> tuple[tuple[str, str, str, int], ...]:
        return self._info[node_id].children

    def has_parent_kind(self, node_id: str, kind: str) -> bool:
        return any(k == kind for _, _, k, _ in self._info[node_id].parents)

    def has_arc_between(self, src: str, dst: str) -> bool:
        """Any constructed edge src -> dst (fragment-internal edges aside)."""
        return any(d == dst and k != "fragment" for d, _, k, _ in self._info[src].children)

    @cached_property
    def top_edge(self) -> Edge | None:
        for e in self.edges:
            if e.src == ROOT and e.label == TOP_LABEL:
                return e
        return None

    def arc_path_exists(self, src: str, dst: str) -> bool:
        """Directed path src -> dst through constructed arcs.

        Fragment-internal edges cannot participate: arcs only ever touch
        pushed fragment roots, so internal nodes have no outgoing arcs.
        """
        seen = {src}
        frontier = [src]
        while frontier:
            node_id = frontier.pop()
            for child, _, kind, _ in self._info[node_id].children:
                if kind == "fragment" or child in seen:
                    continue
                if child == dst:
                    return True
                seen.add(child)
                frontier.append(child)
        return False

    def most_recent_sibling(self, node_id: str) -> str | None:
        """Sibling of a node through constructed edges, newest attachment first.

        Only non-constant siblings qualify: the reentrant edge leaves the
        sibling, and constants may not have outgoing edges.
        """
        best: tuple[int, str] | None = None
        for parent, _, kind, _ in self._info[node_id].parents:
            if kind == "fragment":
                continue
            for child, _, ckind, seq in self._info[parent].children:
                if ckind == "fragment" or child == node_id:
                    continue
                if self.node(child).is_constant:
                    continue
                if best is None or seq > best[0]:
                    best = (seq, child)
        return best[1] if best else None

    @cached_property
    def partial_graph(self) -> AmrGraph:
        """The graph built so far (without the artificial root)."""
        real_edges = tuple(e for e in self.edges if e.src != ROOT)
        return AmrGraph(nodes=self.nodes, edges=self.fragment_edges + real_edges, top=None)

    # -- legality --------------------------------------------------------

    def legal(self) -> set[str]:
        """Kinds of transition applicable in this configuration."""
        kinds: set[str] = set()
        if self.buffer:
            kinds.add(SHIFT)
        s0, s1 = self.sigma(0), self.sigma(1)
        if s0 is not None and s0 != ROOT:
            kinds.add(REDUCE)
            if s1 is not None:
                # Arcs are blocked when an edge already links the pair in
                # either direction; mutual edges would close a cycle.
                linked = s1 != ROOT and (
                    self.has_arc_between(s0, s1) or self.has_arc_between(s1, s0)
                )
                if (
                    s1 != ROOT
                    and not self.node(s0).is_constant
                    and not self.has_parent_kind(s1, "larc")
                    and not linked
                ):
                    kinds.add(LARC)
                rarc_ok = not self.has_parent_kind(s0, "rarc") and not linked
                if s1 == ROOT:
                    # The top of the graph must be able to head a serialized
                    # tree, which a constant cannot.
                    rarc_ok = (
                        rarc_ok
                        and self.top_edge is None
                        and not self.node(s0).is_constant
                    )
                else:
                    rarc_ok = rarc_ok and not self.node(s1).is_constant
                if rarc_ok:
                    kinds.add(RARC)
        return kinds

    @property
    def is_terminal(self) -> bool:
        return not self.buffer and self.stack == (ROOT,)

    # -- applying transitions -------------------------------------------

    def apply(self, transition: Transition) -> "Configuration":
        legal = self.legal()
        if transition.kind not in legal:
            raise TransitionError(
                f"{transition.kind} is not legal here (legal: {sorted(legal)})"
            )
        if isinstance(transition, Shift):
            return self._apply_shift(transition.fragment)
        if isinstance(transition, LArc):
            return self._apply_larc(transition.label)
        if isinstance(transition, RArc):
            return self._apply_rarc(transition.label)
        return self._apply_reduce(transition.reentrant)

    def _apply_shift(self, fragment: Fragment) -> "Configuration":
        token = self.buffer[0]
        buffer = self.buffer[1:]
        if fragment.is_empty:
            return replace(self, buffer=buffer, step=self.step + 1)
        for n in fragment.graph.nodes:
            if n.id == ROOT or self.has_node(n.id):
                raise TransitionError(f"fragment node id {n.id!r} already in the graph")
        depth = _fragment_depth(fragment)
        info = dict(self._info)
        seq = self.step + 1
        for n in fragment.graph.nodes:
            info[n.id] = _NodeInfo(token=token, depth=depth, seq=seq, pushed=(n.id == fragment.root))
        for e in fragment.graph.edges:
            info[e.src] = _add_child(info[e.src], e.dst, e.label, "fragment", seq)
            info[e.dst] = _add_parent(info[e.dst], e.src, e.label, "fragment", seq)
        return replace(
            self,
            stack=self.stack + (fragment.root,),
            buffer=buffer,
            nodes=self.nodes + fragment.graph.nodes,
            fragment_edges=self.fragment_edges + fragment.graph.edges,
            step=seq,
            _info=info,
        )

    def _arc(self, src: str, label: str, dst: str, kind: str) -> tuple[tuple[Edge, ...], dict]:
        if label == TOP_LABEL and src != ROOT:
            raise TransitionError(f"{TOP_LABEL} may only originate at the artificial root")
        if src == ROOT and label != TOP_LABEL:
            raise TransitionError(f"only {TOP_LABEL} may originate at the artificial root")
        seq = self.step + 1
        info = dict(self._info)
        info[src] = _add_child(info[src], dst, label, kind, seq)
        info[dst] = _add_parent(info[dst], src, label, kind, seq)
        return self.edges + (Edge(src, label, dst),), info

    def _apply_larc(self, label: str) -> "Configuration":
        s0, s1 = self.stack[-1], self.stack[-2]
        edges, info = self._arc(s0, label, s1, "larc")
        return replace(
            self,
            stack=self.stack[:-2] + (s0,),
            edges=edges,
            step=self.step + 1,
            _info=info,
        )

    def _apply_rarc(self, label: str) -> "Configuration":
        s0, s1 = self.stack[-1], self.stack[-2]
        edges, info = self._arc(s1, label, s0, "rarc")
        return replace(self, edges=edges, step=self.step + 1, _info=info)

    def _apply_reduce(self, reentrant: tuple[str, str] | None) -> "Configuration":
        s0 = self.stack[-1]
        edges, info = self.edges, self._info
        if reentrant is not None:
            if self.node(s0).is_constant:
                raise TransitionError("constants are not variables; no reentrant edge")
            sibling, label = reentrant
            candidate = self.most_recent_sibling(s0)
            if sibling != candidate:
                raise TransitionError(
                    f"reentrant source must be the most recent sibling {candidate!r}, got {sibling!r}"
                )
            if self.has_parent_kind(s0, "reduce"):
                raise TransitionError("node already has a reentrant parent")
            if self.has_arc_between(sibling, s0) or self.has_arc_between(s0, sibling):
                raise TransitionError(f"{sibling!r} and {s0!r} are already linked")
            if self.arc_path_exists(s0, sibling):
                raise TransitionError(
                    f"edge {sibling!r} -> {s0!r} would close a cycle"
                )
            edges, info = self._arc(sibling, label, s0, "reduce")
        return replace(
            self,
            stack=self.stack[:-1],
            edges=edges,
            step=self.step + 1,
            _info=info,
        )


def _add_child(info: _NodeInfo, other: str, label: str, kind: str, seq: int) -> _NodeInfo:
    return replace(info, children=info.children + ((other, label, kind, seq),))


def _add_parent(info: _NodeInfo, other: str, label: str, kind: str, seq: int) -> _NodeInfo:
    return replace(info, parents=info.parents + ((other, label, kind, seq),))


def _fragment_depth(fragment: Fragment) -> int:
    graph = fragment.graph
    depth: dict[str, int] = {}

    def walk(node_id: str) -> int:
        if node_id in depth:
            return depth[node_id]
        depth[node_id] = 1  # guard against malformed cycles
        best = 1
        for e in graph.children(node_id):
            best = max(best, 1 + walk(e.dst))
        depth[node_id] = best
        return best

    return walk(fragment.root) if fragment.root else 0


def reentrancy_candidate(config: Configuration) -> str | None:
    """Sibling a Reduce in this configuration could draw a reentrant edge from.

    None when the stack top has no eligible sibling: reentrant edges come
    only from the most recently attached sibling, at most one per node, and
    never between already-linked nodes.
    """
    s0 = config.sigma(0)
    if s0 is None or s0 == ROOT or config.node(s0).is_constant:
        return None
    sibling = config.most_recent_sibling(s0)
    if sibling is None or config.has_parent_kind(s0, "reduce"):
        return None
    if config.has_arc_between(sibling, s0) or config.has_arc_between(s0, sibling):
        return None
    if config.arc_path_exists(s0, sibling):
        return None
    return sibling


def initial(sentence: Sentence) -> Configuration:
    return Configuration(
        sentence=sentence,
        stack=(ROOT,),
        buffer=tuple(range(1, len(sentence) + 1)),
        edges=(),
        nodes=(),
        fragment_edges=(),
        step=0,
        _info={ROOT: _ROOT_INFO},
    )


@dataclass(frozen=True)
class LogEntry:
    """One applied transition with the resulting stack/buffer snapshot."""

    step: int
    action: str
    label: str | None
    stack: tuple[str, ...]   # concepts, bottom to top
    buffer: tuple[str, ...]  # remaining tokens
    new_edge: tuple[str, str, str] | None
    forced: bool = False

    def to_json(self) -> str:
        record = {
            "step": self.step,
            "action": self.action,
            "stack": list(self.stack),
            "buffer": list(self.buffer),
        }
        if self.label is not None:
            record["label"] = self.label
        if self.new_edge is not None:
            record["new_edge"] = list(self.new_edge)
        if self.forced:
            record["forced"] = True
        return json.dumps(record, ensure_ascii=False)


def log_entry(before: Configuration, after: Configuration, transition: Transition, forced: bool = False) -> LogEntry:
    label = getattr(transition, "label", None)
    if isinstance(transition, Reduce) and transition.reentrant is not None:
        label = transition.reentrant[1]
    new_edge = None
    if len(after.edges) > len(before.edges):
        e = after.edges[-1]
        new_edge = (after.concept_of(e.src), e.label, after.concept_of(e.dst))
    return LogEntry(
        step=after.step,
        action=transition.kind,
        label=label,
        stack=tuple(after.concept_of(s) for s in after.stack),
        buffer=tuple(after.sentence.tokens[t - 1] for t in after.buffer),
        new_edge=new_edge,
        forced=forced,
    )


@dataclass
class ParserSettings:
    """Caps that keep a single parse linear in sentence length."""

    max_fragment_nodes: int = 10

    def budget(self, n_tokens: int) -> int:
        return 1 + n_tokens + 3 * self.max_fragment_nodes * max(n_tokens, 1)


def greedy_parse(
    sentence: Sentence,
    policy: Callable[[Configuration], Transition],
    settings: ParserSettings | None = None,
) -> tuple[AmrGraph, list[LogEntry]]:
    """Run a policy to termination and assemble the final graph.

    If the transition budget runs out the stack is drained with forced
    Reduces (and leftover tokens consumed with empty Shifts); those entries
    are flagged in the log.  The top edge from the artificial root becomes
    the graph's top; without one, the first pushed node is used.  Nodes left
    unreachable from the top are attached to it with :mod.
    """
    settings = settings or ParserSettings()
    budget = settings.budget(len(sentence))
    config = initial(sentence)
    log: list[LogEntry] = []
    while not config.is_terminal and config.step < budget:
        transition = policy(config)
        after = config.apply(transition)
        log.append(log_entry(config, after, transition, forced=False))
        config = after
    while not config.is_terminal:
        transition: Transition = Reduce() if config.sigma(0) != ROOT else Shift(Fragment())
        after = config.apply(transition)
        log.append(log_entry(config, after, transition, forced=True))
        config = after
    return assemble_graph(config), log


def assemble_graph(config: Configuration) -> AmrGraph:
    graph = config.partial_graph
    if graph.is_empty:
        return graph
    if config.top_edge is not None:
        top = config.top_edge.dst
    else:
        candidates = [
            n.id
            for n in config.nodes
            if not n.is_constant and config._info[n.id].pushed
        ] or [n.id for n in config.nodes if not n.is_constant]
        if not candidates:
            # Only constants were built; no node can head a graph.
            return AmrGraph()
        top = candidates[0]
    edges = list(graph.edges)
    node_ids = [n.id for n in graph.nodes]
    while True:
        result = AmrGraph(nodes=graph.nodes, edges=tuple(edges), top=top)
        parents = result.parents(top)
        if parents:
            # A node pointing at the top can never be reached from it, so
            # serialization would fail; hand the top role to the ancestor.
            top = parents[0].src
            continue
        reachable = result.reachable_from(top)
        missing = [i for i in node_ids if i not in reachable]
        if not missing:
            result.validate()
            return result
        missing_set = set(missing)
        # Sources of the unreachable region have no parents at all, so an
        # edge from the (parentless) top cannot close a cycle.
        anchor = next(
            (i for i in missing if not any(e.src in missing_set for e in result.parents(i))),
            missing[0],
        )
        edges.append(Edge(top, ":mod", anchor))


def render_trace(log: Iterable[LogEntry], sentence: Sentence) -> str:
    """Table of action, stack, buffer and edge-set columns, one row per step."""
    rows = [("-", f"[{ROOT}]", "[" + ", ".join(sentence.tokens) + "]", "{}")]
    edges: list[tuple[str, str, str]] = []
    for entry in log:
        if entry.new_edge is not None:
            edges.append(entry.new_edge)
        action = entry.action + (" (forced)" if entry.forced else "")
        rows.append(
            (
                action,
                "[" + ", ".join(entry.stack) + "]",
                "[" + ", ".join(entry.buffer) + "]",
                "{" + ", ".join(f"⟨{s}, {l}, {d}⟩" for s, l, d in edges) + "}",
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = [
        "  ".join(col.ljust(widths[i]) for i, col in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines)
