"""Shared test utilities.

The checkers here are deliberately brute force and independent of the
library's own algorithms, so they can serve as ground truth: graph
isomorphism tries every admissible node bijection, and the projectivity
check looks for literally crossing arc pairs.
"""

from __future__ import annotations

import random

from amreager.graph import Alignment, AmrGraph, Edge, Node, ROOT

# Coordination walkthrough: sentence, graph, alignment and the full trace
# the parser is expected to produce on it.
COORD_TOKENS = ("the", "boy", "and", "the", "girl")
COORD_GRAPH_TEXT = "(a / and :op1 (b / boy) :op2 (g / girl))"
COORD_ALIGNMENT_MAP = {"b": 2, "a": 3, "g": 5}
COORD_TRACE_ROWS = [
    ("-", "[∘]", "[the, boy, and, the, girl]", "{}"),
    ("Shift", "[∘]", "[boy, and, the, girl]", "{}"),
    ("Shift", "[∘, boy]", "[and, the, girl]", "{}"),
    ("Shift", "[∘, boy, and]", "[the, girl]", "{}"),
    ("LArc", "[∘, and]", "[the, girl]", "{⟨and, :op1, boy⟩}"),
    ("RArc", "[∘, and]", "[the, girl]", "{⟨and, :op1, boy⟩, ⟨∘, :top, and⟩}"),
    ("Shift", "[∘, and]", "[girl]", "{⟨and, :op1, boy⟩, ⟨∘, :top, and⟩}"),
    ("Shift", "[∘, and, girl]", "[]", "{⟨and, :op1, boy⟩, ⟨∘, :top, and⟩}"),
    (
        "RArc",
        "[∘, and, girl]",
        "[]",
        "{⟨and, :op1, boy⟩, ⟨∘, :top, and⟩, ⟨and, :op2, girl⟩}",
    ),
    (
        "Reduce",
        "[∘, and]",
        "[]",
        "{⟨and, :op1, boy⟩, ⟨∘, :top, and⟩, ⟨and, :op2, girl⟩}",
    ),
    (
        "Reduce",
        "[∘]",
        "[]",
        "{⟨and, :op1, boy⟩, ⟨∘, :top, and⟩, ⟨and, :op2, girl⟩}",
    ),
]


def split_trace(text: str) -> list[tuple[str, ...]]:
    """Trace rows as column tuples (columns are padded with 2+ spaces)."""
    import re

    return [tuple(re.split(r"\s{2,}", line)) for line in text.splitlines()]


CONCEPTS = [
    "want-01",
    "go-02",
    "boy",
    "girl",
    "dog",
    "city",
    "and",
    "person",
    "house",
    "run-02",
    "see-01",
    "small",
]
CONSTANT_VALUES = ["-", "3", "New", "monday", "42", "abc"]
LABELS = [":ARG0", ":ARG1", ":ARG2", ":mod", ":op1", ":op2", ":time", ":quant", ":name", ":value"]


def make_random_dag(rng: random.Random, max_nodes: int = 8, constants: bool = True) -> AmrGraph:
    """Connected rooted DAG with random reentrancies and constant leaves."""
    n = rng.randint(1, max_nodes)
    nodes = [Node(id=f"n{i}", concept=rng.choice(CONCEPTS)) for i in range(n)]
    edges: list[Edge] = []
    used: set[tuple[str, str, str]] = set()
    for i in range(1, n):
        parent = rng.randrange(i)
        label = rng.choice(LABELS)
        edges.append(Edge(f"n{parent}", label, f"n{i}"))
        used.add((f"n{parent}", label, f"n{i}"))
    # extra forward edges create reentrancies while preserving acyclicity
    for _ in range(rng.randint(0, n)):
        if n < 2:
            break
        a, b = sorted(rng.sample(range(n), 2))
        label = rng.choice(LABELS)
        key = (f"n{a}", label, f"n{b}")
        if key in used:
            continue
        used.add(key)
        edges.append(Edge(f"n{a}", label, f"n{b}"))
    const_count = 0
    if constants:
        for i in range(n):
            while rng.random() < 0.25:
                const_count += 1
                cid = f"k{const_count}"
                nodes.append(Node(id=cid, concept=rng.choice(CONSTANT_VALUES), is_constant=True))
                edges.append(Edge(f"n{i}", rng.choice(LABELS), cid))
    graph = AmrGraph(nodes=tuple(nodes), edges=tuple(edges), top="n0")
    graph.validate()
    return graph


def graphs_isomorphic(g1: AmrGraph, g2: AmrGraph) -> bool:
    """Exact isomorphism by exhaustive node-bijection search.

    A bijection must preserve concepts/values, constant-ness, the top node
    and the full labeled edge set.
    """
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return False
    ids1 = [n.id for n in g1.nodes]
    candidates: dict[str, list[str]] = {}
    for n1 in g1.nodes:
        cands = [
            n2.id
            for n2 in g2.nodes
            if n2.concept == n1.concept
            and n2.is_constant == n1.is_constant
            and g2.in_degree(n2.id) == g1.in_degree(n1.id)
            and len(g2.children(n2.id)) == len(g1.children(n1.id))
        ]
        if not cands:
            return False
        candidates[n1.id] = cands
    edges2 = set(g2.edges)
    order = sorted(ids1, key=lambda i: len(candidates[i]))

    def extend(idx: int, mapping: dict[str, str], taken: set[str]) -> bool:
        if idx == len(order):
            mapped = {Edge(mapping[e.src], e.label, mapping[e.dst]) for e in g1.edges}
            if mapped != edges2:
                return False
            if (g1.top is None) != (g2.top is None):
                return False
            if g1.top is not None and mapping[g1.top] != g2.top:
                return False
            return True
        node_id = order[idx]
        for cand in candidates[node_id]:
            if cand in taken:
                continue
            mapping[node_id] = cand
            taken.add(cand)
            if extend(idx + 1, mapping, taken):
                return True
            del mapping[node_id]
            taken.discard(cand)
        return False

    return extend(0, {}, set())


def projective_by_crossing(graph: AmrGraph, alignment: Alignment, edge: Edge) -> bool | None:
    """Projectivity ground truth: True iff no other arc properly crosses this one.

    Arcs are drawn between the tokens of their endpoints; the artificial
    root counts as position 0 with an arc to the top node.  Arcs with an
    unaligned endpoint are ignored (and make the query edge unanswerable).
    """

    def pos(node_id: str) -> int | None:
        return 0 if node_id == ROOT else alignment.token_of(node_id)

    pu, pv = pos(edge.src), pos(edge.dst)
    if pu is None or pv is None:
        return None
    lo, hi = min(pu, pv), max(pu, pv)
    arcs = list(graph.edges)
    if graph.top is not None:
        arcs.append(Edge(ROOT, ":top", graph.top))
    for other in arcs:
        if other == edge:
            continue
        pa, pb = pos(other.src), pos(other.dst)
        if pa is None or pb is None:
            continue
        a, b = min(pa, pb), max(pa, pb)
        if lo < a < hi < b or a < lo < b < hi:
            return False
    return True


def random_injective_alignment(
    rng: random.Random, graph: AmrGraph, n_tokens: int, coverage: float = 1.0
) -> Alignment:
    """Distinct token per aligned node; a coverage below 1 leaves gaps."""
    ids = [n.id for n in graph.nodes]
    tokens = rng.sample(range(1, n_tokens + 1), min(len(ids), n_tokens))
    mapping = {}
    for node_id, token in zip(ids, tokens):
        if rng.random() < coverage:
            mapping[node_id] = token
    return Alignment(mapping)


def random_projective_tree(rng: random.Random, n: int) -> list[int]:
    """Parent index per node (token order), -1 for the root; subtrees are
    contiguous spans, so no two tree arcs cross."""
    parent = [-2] * n

    def build(lo: int, hi: int, par: int) -> None:
        if lo > hi:
            return
        r = rng.randint(lo, hi)
        parent[r] = par
        for bound in (r - 1, hi):
            pos = lo if bound == r - 1 else r + 1
            while pos <= bound:
                size = rng.randint(1, bound - pos + 1)
                build(pos, pos + size - 1, r)
                pos += size

    build(0, n - 1, -1)
    return parent


FILLERS = ["the", "to", "of", "very", "a"]


def make_recoverable_gold(
    rng: random.Random,
    max_nodes: int = 9,
    reentrancy_prob: float = 0.35,
    filler_prob: float = 0.25,
):
    """A (sentence, gold graph, alignment) triple the parser can rebuild exactly.

    The gold graph is a projective tree over nodes aligned one-per-token in
    order, plus reentrant edges placed only where a Reduce could add them:
    from the most recently attached sibling of the node being popped.  The
    placement walks the same transition machine the parser uses, growing the
    gold graph as it goes, so every edge is reachable by construction.
    """
    from amreager.graph import Sentence
    from amreager.oracle import _GoldContext, oracle_transition
    from amreager.transitions import Reduce, Shift, initial, reentrancy_candidate

    n = rng.randint(2, max_nodes)
    parent = random_projective_tree(rng, n)
    nodes = tuple(Node(id=f"c{i}", concept=rng.choice(CONCEPTS)) for i in range(n))
    tree_edges = tuple(
        Edge(f"c{parent[i]}", rng.choice(LABELS), f"c{i}")
        for i in range(n)
        if parent[i] >= 0
    )
    gold = AmrGraph(nodes=nodes, edges=tree_edges, top=f"c{parent.index(-1)}")

    tokens: list[str] = []
    node_token: dict[str, int] = {}
    for i in range(n):
        while rng.random() < filler_prob:
            tokens.append(rng.choice(FILLERS))
        tokens.append(f"w{i}")
        node_token[f"c{i}"] = len(tokens)
    if rng.random() < filler_prob:
        tokens.append(".")
    sentence = Sentence(tokens=tuple(tokens))
    alignment = Alignment(node_token)

    # A planted edge from sibling w to popped node v is invisible to every
    # earlier oracle decision only if w did not leave the stack through a
    # "nothing left to do" Reduce before v was pushed; otherwise the edge
    # would retroactively keep w on the stack and reroute the parse.
    pushed_at: dict[str, int] = {}
    reduced_at: dict[str, int] = {}
    config = initial(sentence)
    while not config.is_terminal:
        transition = oracle_transition(config, _GoldContext(sentence, gold, alignment))
        if (
            isinstance(transition, Reduce)
            and transition.reentrant is None
            and rng.random() < reentrancy_prob
        ):
            sibling = reentrancy_candidate(config)
            popped = config.sigma(0)
            safe = sibling is not None and (
                sibling not in reduced_at or reduced_at[sibling] > pushed_at[popped]
            )
            if safe and sibling not in gold.reachable_from(popped):
                label = rng.choice(LABELS)
                gold = AmrGraph(
                    nodes=gold.nodes,
                    edges=gold.edges + (Edge(sibling, label, popped),),
                    top=gold.top,
                )
                transition = Reduce(reentrant=(sibling, label))
        if isinstance(transition, Shift) and not transition.fragment.is_empty:
            pushed_at[transition.fragment.root] = config.step
        elif isinstance(transition, Reduce):
            reduced_at[config.sigma(0)] = config.step
        config = config.apply(transition)
    gold.validate()
    return sentence, gold, alignment


# ---------------------------------------------------------------------------
# toy corpus: 50 small sentences with per-sentence vocabulary, covering
# coordination, plain frames, negation, entities with :wiki, recoverable
# reentrancies and modifier chains.  Distinct words let a classifier
# memorize every decision, which the overfitting checks rely on.


def _toy_records() -> list[tuple[str, tuple[str, ...], str, dict[str, int]]]:
    records = [
        (
            "coord",
            ("the", "boy", "and", "the", "girl"),
            "(a / and :op1 (b / boy) :op2 (g / girl))",
            dict(COORD_ALIGNMENT_MAP),
        )
    ]
    for i in range(2, 51):
        kind = i % 6
        if kind == 0:
            tokens = (f"ag{i}", f"vb{i}", f"th{i}")
            text = f"(v / vb{i}-01 :ARG0 (a / ag{i}) :ARG1 (t / th{i}))"
            align = {"a": 1, "v": 2, "t": 3}
        elif kind == 1:
            tokens = (f"sb{i}", "not", f"vb{i}")
            text = f"(v / vb{i}-01 :polarity - :ARG0 (s / sb{i}))"
            align = {"s": 1, "-": 2, "v": 3}  # "-" resolved to the constant node
        elif kind == 2:
            tokens = (f"ne{i}", f"vb{i}")
            text = (
                f'(v / vb{i}-01 :ARG0 (p / person :wiki "Ne{i}"'
                f' :name (n / name :op1 "Ne{i}")))'
            )
            align = {"p": 1, "v": 2}  # entity subgraph filled in below
        elif kind == 3:
            tokens = (f"ag{i}", f"pr{i}", f"it{i}")
            text = f"(v / pr{i}-01 :ARG0 (x / ag{i} :poss (z / it{i})) :ARG1 z)"
            align = {"x": 1, "v": 2, "z": 3}
        elif kind == 4:
            tokens = (f"big{i}", f"dog{i}", f"ran{i}")
            text = f"(v / ran{i}-01 :ARG0 (d / dog{i} :mod (b / big{i})))"
            align = {"b": 1, "d": 2, "v": 3}
        else:
            tokens = (f"cat{i}", "and", f"pig{i}")
            text = f"(c / and :op1 (x / cat{i}) :op2 (y / pig{i}))"
            align = {"x": 1, "c": 2, "y": 3}
        records.append((f"toy{i}", tokens, text, align))
    return records


def toy_bundle():
    """The 50-sentence training bundle as a CorpusBundle."""
    from amreager.align import format_alignments
    from amreager.corpus import AmrBlock, CorpusBundle
    from amreager.graph import Sentence
    from amreager.penman import parse_penman

    blocks = []
    sentences = {}
    for block_id, tokens, text, align in _toy_records():
        graph = parse_penman(text)
        variables = {n.id for n in graph.nodes if not n.is_constant}
        mapping = {}
        for key, token in align.items():
            if key == "-":
                (key,) = [
                    n.id for n in graph.nodes if n.is_constant and n.concept == "-"
                ]
            mapping[key] = token
        if block_id.startswith("toy") and "p" in mapping:
            # align the whole entity subgraph (name node and constants) with
            # its root, so the fragment covers it
            for node in graph.nodes:
                if node.id not in mapping and node.id != graph.top:
                    mapping[node.id] = mapping["p"]
        alignment = Alignment(mapping)
        blocks.append(
            AmrBlock(
                id=block_id,
                snt=" ".join(tokens),
                tokens=tokens,
                alignments=format_alignments(alignment, graph),
                penman=text,
            )
        )
        sentences[block_id] = Sentence(tokens=tokens)
        assert variables  # every toy graph has at least one variable
    return CorpusBundle(blocks=tuple(blocks), sentences=sentences)


def timing_sentence(n: int):
    """A synthetic n-token sentence of unseen words."""
    from amreager.graph import Sentence

    return Sentence(tokens=tuple(f"w{j}" for j in range(n)))
