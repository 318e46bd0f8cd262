"""Choosing the graph fragment a token contributes at Shift time.

Three mechanisms cooperate.  A phrase table counts which fragment each
training token was shifted with and answers lookups with the most frequent
one.  Deterministic hooks fire on named-entity tags and build the fixed
subgraphs for people, places, organizations, dates, ordinals, percentages
and money.  Unseen tokens fall back to a single concept node derived from
the lemma.  The module also owns the table of labeling rules that says
which edge labels are admissible between two node labels.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .graph import (
    AmrGraph,
    EMPTY_FRAGMENT,
    Edge,
    Fragment,
    GraphError,
    Node,
    ROOT,
    Sentence,
    TOP_LABEL,
    is_frame,
    is_number,
)
from .penman import canonical_penman, format_constant, parse_penman
from .transitions import SHIFT

log = logging.getLogger(__name__)

# Canonical form of the empty fragment in tables and dumps.
EMPTY_MARK = "()"


# ---------------------------------------------------------------------------
# canonical fragment form


class _Reenters(Exception):
    """A fragment node was reached twice; variable-free form impossible."""


def canonical_fragment(fragment: Fragment) -> str:
    """Variable-free serialization used to pool counts across fragments
    that differ only in node ids or edge order.

    Concept nodes print as ``(concept :label child ...)`` with children
    sorted by label then text; constants print bare or quoted.  A fragment
    that re-enters one of its own nodes cannot be written without
    variables and falls back to renamed graph notation.
    """
    if fragment.is_empty:
        return EMPTY_MARK
    graph = fragment.graph
    reached: set[str] = set()

    def emit(node_id: str) -> str:
        node = graph.node(node_id)
        if node.is_constant:
            reached.add(node_id)
            return format_constant(node.concept)
        if node_id in reached:
            raise _Reenters
        reached.add(node_id)
        parts = sorted(f" {e.label} {emit(e.dst)}" for e in graph.children(node_id))
        return f"({node.concept}{''.join(parts)})"

    try:
        text = emit(fragment.root)
    except _Reenters:
        return canonical_penman(graph)
    if len(reached) < len(graph.nodes):
        raise GraphError(f"fragment nodes unreachable from root {fragment.root!r}")
    return text


def _with_variables(text: str) -> str:
    """Insert fresh variables after every '(' so graph text results."""
    out: list[str] = []
    counter = 0
    in_string = False
    for ch in text:
        out.append(ch)
        if ch == '"':
            in_string = not in_string
        elif ch == "(" and not in_string:
            out.append(f"v{counter} / ")
            counter += 1
    return "".join(out)


def fragment_from_canonical(text: str, prefix: str = "n") -> Fragment:
    """Materialize a fragment from its canonical form with fresh node ids
    ``prefix0``, ``prefix1``, ... so repeated instantiations never collide.
    """
    if text == EMPTY_MARK:
        return EMPTY_FRAGMENT
    if not text.startswith("("):
        # A lone constant prints bare; it has no graph text to parse.
        value = text[1:-1] if text.startswith('"') and text.endswith('"') else text
        node = Node(id=f"{prefix}0", concept=value, is_constant=True)
        return Fragment(graph=AmrGraph(nodes=(node,), top=node.id), root=node.id)
    graph = parse_penman(text if " / " in text else _with_variables(text))
    mapping = {n.id: f"{prefix}{i}" for i, n in enumerate(graph.nodes)}
    nodes = tuple(
        Node(id=mapping[n.id], concept=n.concept, is_constant=n.is_constant)
        for n in graph.nodes
    )
    edges = tuple(Edge(mapping[e.src], e.label, mapping[e.dst]) for e in graph.edges)
    top = mapping[graph.top]
    return Fragment(graph=AmrGraph(nodes=nodes, edges=edges, top=top), root=top)


# ---------------------------------------------------------------------------
# phrase table


@dataclass(frozen=True)
class PhraseTable:
    """Token → fragments seen at Shift time, with counts.

    Per-token entries are (canonical form, count) pairs sorted by count
    descending, then canonical form ascending, so the best entry is always
    first and lookups are deterministic.
    """

    entries: dict[str, tuple[tuple[str, int], ...]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def fragments_for(self, token: str) -> tuple[tuple[str, int], ...]:
        return self.entries.get(token, ())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for token in sorted(self.entries):
                for canonical, count in self.entries[token]:
                    handle.write(f"{token}\t{count}\t{canonical}\n")

    @classmethod
    def load(cls, path) -> "PhraseTable":
        counts: dict[str, list[tuple[str, int]]] = {}
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    token, count, canonical = line.split("\t", 2)
                    counts.setdefault(token, []).append((canonical, int(count)))
                except ValueError:
                    raise ValueError(f"{path}:{line_no}: bad phrase-table row {line!r}") from None
        return cls(entries={t: _sort_entries(pairs) for t, pairs in counts.items()})


def _sort_entries(pairs: Iterable[tuple[str, int]]) -> tuple[tuple[str, int], ...]:
    return tuple(sorted(pairs, key=lambda pair: (-pair[1], pair[0])))


def build_phrase_table(runs: Iterable) -> PhraseTable:
    """Count (token, fragment) pairs over the Shift steps of oracle runs.

    Accepts anything iterable whose items either have a ``steps`` list or
    are step sequences themselves.  Fragments that cannot be canonicalized
    (no single root) are skipped with a warning.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for run in runs:
        for step in getattr(run, "steps", run):
            if step.transition.kind != SHIFT:
                continue
            token_index = step.config.beta(0)
            token = step.config.sentence.tokens[token_index - 1]
            try:
                counts[(token, canonical_fragment(step.transition.fragment))] += 1
            except GraphError as exc:
                log.warning("skipping fragment for token %r: %s", token, exc)
    per_token: dict[str, list[tuple[str, int]]] = {}
    for (token, canonical), count in counts.items():
        per_token.setdefault(token, []).append((canonical, count))
    return PhraseTable(entries={t: _sort_entries(pairs) for t, pairs in per_token.items()})


def lookup(
    table: PhraseTable,
    token: str,
    lemma: str | None = None,
    pos: str | None = None,
    prefix: str = "n",
) -> Fragment:
    """Most frequent fragment for the token, or a fallback for unseen ones.

    The fallback is a single concept node holding the lowercased lemma;
    verb lemmas (POS starting with VB) get a "-01" sense suffix, numeric
    tokens become constants, and tokens with no word characters contribute
    nothing.
    """
    entries = table.fragments_for(token)
    if entries:
        return fragment_from_canonical(entries[0][0], prefix=prefix)
    if is_number(token):
        node = Node(id=f"{prefix}0", concept=token, is_constant=True)
        return Fragment(graph=AmrGraph(nodes=(node,), top=node.id), root=node.id)
    concept = (lemma or token).lower()
    if not re.search(r"\w", concept):
        return EMPTY_FRAGMENT
    if pos and pos.startswith("VB"):
        concept = f"{concept}-01"
    node = Node(id=f"{prefix}0", concept=concept)
    return Fragment(graph=AmrGraph(nodes=(node,), top=node.id), root=node.id)


# ---------------------------------------------------------------------------
# named-entity, date and quantity hooks

# Entity tag → root concept.  Coarse location tags default to country,
# matching the usual case; the defaulting is logged.
_ENTITY_ROOTS = {
    "person": "person",
    "per": "person",
    "city": "city",
    "state": "state",
    "province": "state",
    "country": "country",
    "organization": "organization",
    "org": "organization",
}
_COARSE_LOCATION_TAGS = {"location", "loc", "gpe"}
_DATE_TAGS = {"date", "time"}
_ORDINAL_TAGS = {"ordinal"}
_PERCENT_TAGS = {"percent", "percentage"}
_MONEY_TAGS = {"money", "monetary"}

_MONTHS = {
    name.lower(): i
    for i, name in enumerate(
        ("january", "february", "march", "april", "may", "june", "july",
         "august", "september", "october", "november", "december"),
        start=1,
    )
}
_MONTHS.update({name[:3]: i for name, i in list(_MONTHS.items())})
_MONTHS["sept"] = 9

WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")
SEASONS = ("winter", "spring", "summer", "fall")

_ORDINAL_WORDS = {
    word: i
    for i, word in enumerate(
        ("first", "second", "third", "fourth", "fifth", "sixth", "seventh",
         "eighth", "ninth", "tenth", "eleventh", "twelfth"),
        start=1,
    )
}
_SCALE_WORDS = {"thousand": 10**3, "million": 10**6, "billion": 10**9, "trillion": 10**12}
_CURRENCY_SYMBOLS = {"$": "dollar", "€": "euro", "£": "pound", "¥": "yen"}
_CURRENCY_WORDS = {
    "dollar": "dollar", "dollars": "dollar", "cent": "cent", "cents": "cent",
    "euro": "euro", "euros": "euro", "pound": "pound", "pounds": "pound",
    "yen": "yen",
}

# Emission order for date-entity fields.
_DATE_FIELDS = (
    ":day", ":month", ":year", ":weekday", ":season",
    ":decade", ":century", ":quarter", ":timezone",
)


def _strip_ordinal(part: str) -> str | None:
    m = re.fullmatch(r"(\d+)(st|nd|rd|th)", part, re.IGNORECASE)
    return m.group(1) if m else None


def _parse_date(token: str) -> dict[str, str] | None:
    """Extract date-entity fields from one collapsed date token.

    Returns None when nothing recognizable is found or a numeric field
    falls outside its range.
    """
    cleaned = token.replace("_", " ").replace(",", " ").strip(" .")
    compact = cleaned.replace(" ", "")
    fields: dict[str, str] = {}

    def put(name: str, value: str, low: int = 0, high: int = 0) -> bool:
        if name in fields:
            return False
        if high and not (low <= int(value) <= high):
            return False
        fields[name] = str(int(value)) if value.isdigit() else value
        return True

    m = re.fullmatch(r"(\d{4})-(\d{1,2})(?:-(\d{1,2}))?", compact)
    if not m:
        m = re.fullmatch(r"(\d{4})(\d{2})(\d{2})", compact)
    if m:
        day = m.group(3) if m.lastindex >= 3 else None
        if not put(":year", m.group(1)) or not put(":month", m.group(2), 1, 12):
            return None
        if day is not None and not put(":day", day, 1, 31):
            return None
        return fields
    m = re.fullmatch(r"(\d{2})(\d{2})(\d{2})", compact)
    if m:
        year = int(m.group(1))
        year += 2000 if year < 50 else 1900
        if put(":year", str(year)) and put(":month", m.group(2), 1, 12) and put(":day", m.group(3), 1, 31):
            return fields
        return None
    m = re.fullmatch(r"(\d{1,2})/(\d{1,2})/(\d{4})", compact)
    if m:
        if put(":month", m.group(1), 1, 12) and put(":day", m.group(2), 1, 31) and put(":year", m.group(3)):
            return fields
        return None

    parts = [p for p in cleaned.split() if p and p.lower() != "the"]
    i = 0
    while i < len(parts):
        part = parts[i]
        low = part.lower()
        ahead = parts[i + 1].lower() if i + 1 < len(parts) else ""
        ordinal = _strip_ordinal(part)
        if low in _MONTHS:
            if not put(":month", str(_MONTHS[low])):
                return None
        elif low in WEEKDAYS:
            if not put(":weekday", low):
                return None
        elif low in SEASONS or low == "autumn":
            if not put(":season", "fall" if low == "autumn" else low):
                return None
        elif re.fullmatch(r"\d{4}s", low):
            if not put(":decade", low[:-1]):
                return None
        elif ordinal and ahead == "century":
            if not put(":century", ordinal):
                return None
            i += 1
        elif m := re.fullmatch(r"q([1-4])", low):
            if not put(":quarter", m.group(1)):
                return None
        elif re.fullmatch(r"[A-Z]{3}", part):
            if not put(":timezone", part):
                return None
        elif ordinal:
            if not put(":day", ordinal, 1, 31):
                return None
        elif re.fullmatch(r"\d{4}", part):
            if not put(":year", part):
                return None
        elif part.isdigit():
            if not put(":day", part, 1, 31):
                return None
        else:
            return None
        i += 1
    return fields or None


class _Builder:
    """Accumulates nodes and edges for one hook fragment."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.nodes: list[Node] = []
        self.edges: list[Edge] = []

    def concept(self, concept: str) -> str:
        node = Node(id=f"{self.prefix}{len(self.nodes)}", concept=concept)
        self.nodes.append(node)
        return node.id

    def constant(self, value: str) -> str:
        node = Node(id=f"{self.prefix}{len(self.nodes)}", concept=value, is_constant=True)
        self.nodes.append(node)
        return node.id

    def edge(self, src: str, label: str, dst: str) -> None:
        self.edges.append(Edge(src, label, dst))

    def fragment(self, root: str) -> Fragment:
        graph = AmrGraph(nodes=tuple(self.nodes), edges=tuple(self.edges), top=root)
        graph.validate()
        return Fragment(graph=graph, root=root)


def _entity_fragment(token: str, root_concept: str, prefix: str) -> Fragment:
    build = _Builder(prefix)
    root = build.concept(root_concept)
    name = build.concept("name")
    build.edge(root, ":name", name)
    for i, word in enumerate(w for w in token.split("_") if w):
        build.edge(name, f":op{i + 1}", build.constant(word))
    build.edge(root, ":wiki", build.constant(token))
    return build.fragment(root)


def _date_fragment(fields: dict[str, str], prefix: str) -> Fragment:
    build = _Builder(prefix)
    root = build.concept("date-entity")
    for label in _DATE_FIELDS:
        if label not in fields:
            continue
        value = fields[label]
        # weekday and season values are concepts, the rest are constants
        dst = build.concept(value) if label in (":weekday", ":season") else build.constant(value)
        build.edge(root, label, dst)
    return build.fragment(root)


def _quantity_fragment(concept: str, value: str, unit: str | None, prefix: str) -> Fragment:
    build = _Builder(prefix)
    root = build.concept(concept)
    build.edge(root, ":value", build.constant(value))
    if unit:
        build.edge(root, ":unit", build.concept(unit))
    return build.fragment(root)


def _format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(value)


def _parse_money(token: str, context: Sentence | None) -> tuple[str, str] | None:
    parts = [p for p in token.replace(",", "").split("_") if p]
    unit = None
    value = None
    scale = 1
    for part in parts:
        low = part.lower()
        if part[:1] in _CURRENCY_SYMBOLS:
            unit = _CURRENCY_SYMBOLS[part[0]]
            part = part[1:]
        if low in _CURRENCY_WORDS:
            unit = _CURRENCY_WORDS[low]
        elif low in _SCALE_WORDS:
            scale *= _SCALE_WORDS[low]
        elif part and is_number(part):
            value = float(part)
    if value is None:
        return None
    # a bare figure like "$5" may have its scale word still in the buffer
    if scale == 1 and context is not None and context.tokens:
        following = context.tokens[0].lower()
        if following in _SCALE_WORDS:
            scale = _SCALE_WORDS[following]
    return _format_number(value * scale), unit or "dollar"


def apply_hooks(
    token: str,
    ner: str | None,
    context: Sentence | None = None,
    prefix: str = "n",
) -> Fragment | None:
    """Build the fixed fragment for an entity-tagged token, if any.

    ``context`` is the rest of the sentence after the token; money hooks
    peek at it for a trailing scale word.  Returns None when no hook fires
    so the caller falls back to the phrase table.
    """
    tag = (ner or "").lower()
    if not tag or tag == "o":
        return None
    if tag in _COARSE_LOCATION_TAGS:
        log.info("coarse location tag %r on %r defaulted to country", ner, token)
        return _entity_fragment(token, "country", prefix)
    if tag in _ENTITY_ROOTS:
        return _entity_fragment(token, _ENTITY_ROOTS[tag], prefix)
    if tag in _DATE_TAGS:
        fields = _parse_date(token)
        if fields is None:
            log.warning("date tag on %r but no parseable date; falling back", token)
            return None
        return _date_fragment(fields, prefix)
    if tag in _ORDINAL_TAGS:
        low = token.lower()
        number = _strip_ordinal(low)
        if number is None and low in _ORDINAL_WORDS:
            number = str(_ORDINAL_WORDS[low])
        if number is None:
            log.warning("ordinal tag on %r but no parseable rank; falling back", token)
            return None
        return _quantity_fragment("ordinal-entity", number, None, prefix)
    if tag in _PERCENT_TAGS:
        m = re.fullmatch(r"([+-]?\d+(?:\.\d+)?)\s*(?:%|percent|per cent)?", token.replace("_", " "))
        if m is None:
            log.warning("percent tag on %r but no parseable figure; falling back", token)
            return None
        return _quantity_fragment("percentage-entity", _format_number(float(m.group(1))), None, prefix)
    if tag in _MONEY_TAGS:
        parsed = _parse_money(token, context)
        if parsed is None:
            log.warning("money tag on %r but no parseable amount; falling back", token)
            return None
        value, unit = parsed
        return _quantity_fragment("monetary-quantity", value, unit, prefix)
    return None


# ---------------------------------------------------------------------------
# labeling rules

_NON_CORE = (
    ":accompanier", ":age", ":beneficiary", ":calendar", ":cause", ":century",
    ":concession", ":condition", ":consist-of", ":day", ":dayperiod", ":decade",
    ":degree", ":destination", ":direction", ":domain", ":duration", ":era",
    ":example", ":extent", ":frequency", ":instrument", ":li", ":location",
    ":manner", ":medium", ":mod", ":mode", ":month", ":name", ":ord", ":part",
    ":path", ":polarity", ":polite", ":poss", ":purpose", ":quant", ":quarter",
    ":range", ":scale", ":season", ":source", ":subevent", ":time", ":timezone",
    ":topic", ":unit", ":value", ":weekday", ":wiki", ":year", ":year2",
)
_INVERTIBLE = (
    ":accompanier", ":age", ":beneficiary", ":cause", ":concession", ":condition",
    ":degree", ":destination", ":direction", ":duration", ":example", ":extent",
    ":frequency", ":instrument", ":location", ":manner", ":medium", ":part",
    ":path", ":poss", ":purpose", ":quant", ":source", ":subevent", ":time",
    ":topic",
)

LABEL_INVENTORY: frozenset[str] = frozenset(
    (TOP_LABEL,)
    + tuple(f":ARG{i}" for i in range(10))
    + tuple(f":ARG{i}-of" for i in range(10))
    + tuple(f":op{i}" for i in range(1, 11))
    + tuple(f":snt{i}" for i in range(1, 4))
    + _NON_CORE
    + tuple(f"{label}-of" for label in _INVERTIBLE)
)

_MODES = {"interrogative", "expressive", "imperative"}
_ARG_LABEL_RE = re.compile(r"^:ARG(\d)(-of)?$")


def _in_range(value: str, low: int, high: int) -> bool:
    return value.isdigit() and low <= int(value) <= high


def load_arity_table(path) -> dict[str, frozenset[int]]:
    """Read a frame → allowed ARG numbers table: ``frame<TAB>0,1,2`` rows."""
    table: dict[str, frozenset[int]] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                frame, numbers = line.split("\t")
                table[frame] = frozenset(int(n) for n in numbers.split(",") if n)
            except ValueError:
                raise ValueError(f"{path}:{line_no}: bad arity row {line!r}") from None
    return table


def allowed_labels(
    src: str,
    dst: str,
    arity_table: dict[str, frozenset[int]] | None = None,
) -> set[str]:
    """Edge labels admissible from a node labeled ``src`` to one labeled
    ``dst``; ``src`` may be the artificial root, which only emits :top.

    Exclusive rules (:top, :polarity, :mode, :weekday, :season, :timezone)
    allow their label nowhere else; date-entity field labels are dropped
    when their value pattern fails; an arity table further restricts ARG
    roles of known frames.
    """
    if src == ROOT:
        return {TOP_LABEL}
    labels = set(LABEL_INVENTORY)
    labels.discard(TOP_LABEL)
    if dst != "-":
        labels.discard(":polarity")
    if dst not in _MODES:
        labels.discard(":mode")
    if not (src == "date-entity" and dst in WEEKDAYS):
        labels.discard(":weekday")
    if not (src == "date-entity" and dst in SEASONS):
        labels.discard(":season")
    if not (src == "date-entity" and re.fullmatch(r"[A-Z]{3}", dst)):
        labels.discard(":timezone")
    if src == "date-entity":
        if not _in_range(dst, 1, 31):
            labels.discard(":day")
        if not _in_range(dst, 1, 12):
            labels.discard(":month")
        if not _in_range(dst, 1, 4):
            labels.discard(":quarter")
        for label in (":year", ":decade", ":century"):
            if not dst.isdigit():
                labels.discard(label)
        if not (is_number(dst) or re.fullmatch(r"\w+", dst)):
            labels.discard(":value")
    if arity_table and is_frame(src) and src in arity_table:
        allowed_numbers = arity_table[src]
        for label in list(labels):
            m = _ARG_LABEL_RE.match(label)
            if m and int(m.group(1)) not in allowed_numbers:
                labels.discard(label)
    return labels


# ---------------------------------------------------------------------------
# negation lexicon

# Words whose tokens should align to the "-" polarity constant during
# preprocessing.  Extendable from a file, one word per line.
NEGATION_SEED: frozenset[str] = frozenset({
    "not", "no", "never", "none", "nothing", "nobody", "nowhere", "neither",
    "nor", "without", "n't", "cannot", "non",
    "illegitimate", "illegal", "asymmetry", "impossible", "unable", "unfair",
    "unlikely", "nonexistent",
})


def load_negation_lexicon(path=None) -> frozenset[str]:
    """Seed negation words, plus any extras from a user-supplied file."""
    words = set(NEGATION_SEED)
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                word = line.strip().lower()
                if word and not word.startswith("#"):
                    words.add(word)
    return frozenset(words)
