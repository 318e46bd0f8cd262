"""Reading and writing AMR graphs in parenthesized notation.

``parse_penman`` turns text like ``(b / beg-01 :ARG0 (i / i))`` into an
AmrGraph; ``serialize_penman`` is its inverse.  Serialization walks the graph
depth-first from the top node, emitting children in edge-insertion order and
re-entering already-printed nodes as bare variables, so a parse/serialize
round trip is stable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .graph import AmrGraph, BARE_CONSTANTS, Edge, GraphError, Node, is_number

_VAR_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9_'\-]*$")


class PenmanError(ValueError):
    """Parse failure with 1-based line/column of the offending token."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch in "()":
            tokens.append(_Token(ch, line, col))
            col += 1
            i += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise PenmanError("unterminated string", line, col)
                j += 1
            if j >= n:
                raise PenmanError("unterminated string", line, col)
            tokens.append(_Token(text[i : j + 1], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in '()"':
            j += 1
        tokens.append(_Token(text[i:j], line, col))
        col += j - i
        i = j
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.var_nodes: dict[str, Node] = {}
        self.var_order: list[str] = []
        # Children are recorded in text order; bare tokens stay unresolved
        # until the end so a variable mentioned before its definition still
        # connects to the right node.
        self.raw_edges: list[tuple[str, str, _Token, bool]] = []

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, what: str) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", 1, 1)
            raise PenmanError(f"expected {what}, found end of input", last.line, last.column)
        self.pos += 1
        return tok

    def parse(self) -> AmrGraph:
        tok = self._next("'('")
        if tok.text != "(":
            raise PenmanError(f"expected '(', found {tok.text!r}", tok.line, tok.column)
        top = self._parse_node(tok)
        extra = self._peek()
        if extra is not None:
            raise PenmanError(f"unexpected token {extra.text!r} after graph", extra.line, extra.column)
        return self._build(top)

    def _parse_node(self, open_tok: _Token) -> str:
        var_tok = self._next("a variable")
        var = var_tok.text
        if var in "()/" or var.startswith(":") or var.startswith('"'):
            raise PenmanError(f"expected a variable, found {var!r}", var_tok.line, var_tok.column)
        slash = self._next("'/'")
        if slash.text != "/":
            raise PenmanError(f"expected '/', found {slash.text!r}", slash.line, slash.column)
        concept_tok = self._next("a concept")
        concept = concept_tok.text
        if concept in "()/" or concept.startswith(":"):
            raise PenmanError(f"expected a concept, found {concept!r}", concept_tok.line, concept_tok.column)
        if var in self.var_nodes:
            raise PenmanError(f"duplicate variable definition {var!r}", var_tok.line, var_tok.column)
        self.var_nodes[var] = Node(id=var, concept=concept, variable=var)
        self.var_order.append(var)

        while True:
            tok = self._next("':label' or ')'")
            if tok.text == ")":
                return var
            if not tok.text.startswith(":") or len(tok.text) < 2:
                raise PenmanError(f"expected a role label, found {tok.text!r}", tok.line, tok.column)
            label = tok.text
            value = self._next("a value")
            if value.text == "(":
                child = self._parse_node(value)
                self.raw_edges.append((var, label, _Token(child, value.line, value.column), True))
            elif value.text in (")", "/") or value.text.startswith(":"):
                raise PenmanError(f"expected a value after {label!r}, found {value.text!r}", value.line, value.column)
            else:
                self.raw_edges.append((var, label, value, False))

    def _build(self, top: str) -> AmrGraph:
        nodes: list[Node] = [self.var_nodes[v] for v in self.var_order]
        edges: list[Edge] = []
        const_count = 0
        for src, label, value_tok, is_node in self.raw_edges:
            if is_node:
                edges.append(Edge(src, label, value_tok.text))
                continue
            text = value_tok.text
            if text.startswith('"'):
                const_count += 1
                node_id = f"#c{const_count}"
                nodes.append(Node(id=node_id, concept=text[1:-1], is_constant=True))
                edges.append(Edge(src, label, node_id))
            elif text in self.var_nodes:
                edges.append(Edge(src, label, text))
            elif _VAR_RE.match(text) and text not in BARE_CONSTANTS and not is_number(text):
                raise PenmanError(
                    f"undefined variable reference {text!r}", value_tok.line, value_tok.column
                )
            else:
                const_count += 1
                node_id = f"#c{const_count}"
                nodes.append(Node(id=node_id, concept=text, is_constant=True))
                edges.append(Edge(src, label, node_id))
        graph = AmrGraph(nodes=tuple(nodes), edges=tuple(edges), top=top)
        graph.validate()
        return graph


def parse_penman(text: str) -> AmrGraph:
    """Parse one graph from text, which must contain nothing else."""
    return _Parser(text).parse()


def format_constant(value: str) -> str:
    """Render a constant the way it appears in graph text: quoted unless
    it is a number or one of the bare keywords."""
    if is_number(value) or value in BARE_CONSTANTS:
        return value
    return f'"{value}"'


def _assign_variables(graph: AmrGraph, order: list[str]) -> dict[str, str]:
    """Give every non-constant node a variable, keeping existing ones."""
    names: dict[str, str] = {}
    used: set[str] = set()
    for node_id in order:
        node = graph.node(node_id)
        if node.is_constant:
            continue
        if node.variable is not None:
            names[node_id] = node.variable
            used.add(node.variable)
    for node_id in order:
        node = graph.node(node_id)
        if node.is_constant or node_id in names:
            continue
        first = node.concept[:1].lower()
        base = first if first.isalpha() else "x"
        name = base
        k = 1
        while name in used:
            k += 1
            name = f"{base}{k}"
        used.add(name)
        names[node_id] = name
    return names


def _dfs_order(graph: AmrGraph) -> list[str]:
    order: list[str] = []
    seen: set[str] = set()

    def visit(node_id: str) -> None:
        if node_id in seen:
            return
        seen.add(node_id)
        order.append(node_id)
        for e in graph.children(node_id):
            visit(e.dst)

    if graph.top is not None:
        visit(graph.top)
    return order


def serialize_penman(graph: AmrGraph, rename: bool = False) -> str:
    """Serialize a graph to a single line of parenthesized notation.

    With ``rename=True`` variables are replaced by v0, v1, ... in emission
    order, which gives a canonical form for comparing graphs that differ
    only in variable naming.
    """
    if graph.is_empty:
        raise GraphError("cannot serialize an empty graph")
    if graph.top is None:
        raise GraphError("cannot serialize a graph without a top node")
    order = _dfs_order(graph)
    unreachable = [n.id for n in graph.nodes if n.id not in order]
    if unreachable:
        raise GraphError(f"nodes unreachable from top: {', '.join(sorted(unreachable))}")
    if rename:
        names = {}
        counter = 0
        for node_id in order:
            if not graph.node(node_id).is_constant:
                names[node_id] = f"v{counter}"
                counter += 1
    else:
        names = _assign_variables(graph, order)

    printed: set[str] = set()

    def emit(node_id: str) -> str:
        node = graph.node(node_id)
        if node.is_constant:
            return format_constant(node.concept)
        if node_id in printed:
            return names[node_id]
        printed.add(node_id)
        parts = [f"({names[node_id]} / {node.concept}"]
        for e in graph.children(node_id):
            parts.append(f" {e.label} {emit(e.dst)}")
        parts.append(")")
        return "".join(parts)

    return emit(graph.top)


def canonical_penman(graph: AmrGraph) -> str:
    """Serialization that is stable under variable renaming."""
    return serialize_penman(graph, rename=True)
