"""Corpus files: AMR blocks, annotation sidecars, and preprocessing.

A corpus file holds blocks separated by blank lines.  Each block carries
``# ::key value`` comment lines (``id``, ``snt``, ``tok``, ``alignments``)
followed by the PENMAN text.  The annotation sidecar is JSON lines: one
object per sentence with an ``id`` plus ``tokens``, ``lemmas``, ``pos``,
``ner`` and ``deps`` (``deps`` as [head, dependent, label] with 0 = root).

A *bundle* file is the same block format with one extra
``# ::annotation {...}`` line per block inlining its sidecar record, so
a preprocessed corpus travels as a single self-contained file.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

from .align import AlignmentError, format_alignments, parse_alignments
from .concepts import load_negation_lexicon
from .graph import Alignment, AmrGraph, GraphError, Sentence
from .penman import PenmanError, parse_penman

log = logging.getLogger(__name__)

_META_RE = re.compile(r"^#\s*::(\w+)\s*(.*)$")

NEGATIVE = "-"
POLARITY = ":polarity"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class AmrBlock:
    """One corpus record: metadata comment lines plus the PENMAN text.

    ``alignments`` and ``penman`` stay as raw text so blocks round-trip
    byte-for-byte; :meth:`graph` and :meth:`alignment` parse on demand.
    """

    id: str
    snt: str = ""
    tokens: tuple[str, ...] = ()
    alignments: str = ""
    penman: str = ""

    def graph(self) -> AmrGraph:
        if not self.penman:
            raise CorpusError(f"block {self.id} has no graph text")
        try:
            return parse_penman(self.penman)
        except (PenmanError, GraphError) as err:
            raise CorpusError(f"block {self.id}: {err}") from err

    def alignment(self, graph: AmrGraph | None = None) -> Alignment:
        if not self.alignments:
            return Alignment({})
        try:
            return parse_alignments(self.alignments, graph or self.graph())
        except AlignmentError as err:
            raise CorpusError(f"block {self.id}: {err}") from err


@dataclass(frozen=True)
class CorpusBundle:
    """Corpus blocks plus their sentence annotations, keyed by block id.

    When annotations are present they must cover every block id; loading
    enforces that unless the caller opts into per-record handling.
    """

    blocks: tuple[AmrBlock, ...]
    sentences: dict[str, Sentence] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for block in self.blocks:
            if block.id in seen:
                raise CorpusError(f"duplicate block id {block.id!r}")
            seen.add(block.id)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[AmrBlock]:
        return iter(self.blocks)

    def sentence_for(self, block: AmrBlock) -> Sentence | None:
        """The block's annotation record, or a bare-token sentence."""
        sentence = self.sentences.get(block.id)
        if sentence is not None:
            return sentence
        if block.tokens:
            return Sentence(tokens=block.tokens)
        return None

    def missing_annotations(self) -> list[str]:
        return [b.id for b in self.blocks if b.id not in self.sentences]


# ---------------------------------------------------------------------------
# reading and writing


def sentence_from_json(record: dict) -> Sentence:
    try:
        deps = tuple((int(h), int(d), str(label)) for h, d, label in record.get("deps", ()))
        return Sentence(
            tokens=tuple(record["tokens"]),
            lemmas=tuple(record.get("lemmas", ())),
            pos=tuple(record.get("pos", ())),
            ner=tuple(record.get("ner", ())),
            deps=deps,
        )
    except (KeyError, TypeError, ValueError) as err:
        raise CorpusError(f"bad annotation record: {err}") from err


def sentence_to_json(sentence: Sentence) -> dict:
    record: dict = {"tokens": list(sentence.tokens)}
    for name in ("lemmas", "pos", "ner"):
        layer = getattr(sentence, name)
        if layer:
            record[name] = list(layer)
    if sentence.deps:
        record["deps"] = [[h, d, label] for h, d, label in sentence.deps]
    return record


def parse_sidecar(text: str) -> dict[str, Sentence]:
    """One JSON object per non-empty line, keyed by its ``id`` field."""
    sentences: dict[str, Sentence] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise CorpusError(f"sidecar line {lineno}: {err}") from err
        if "id" not in record:
            raise CorpusError(f"sidecar line {lineno}: record has no id")
        rid = str(record["id"])
        if rid in sentences:
            raise CorpusError(f"sidecar line {lineno}: duplicate id {rid!r}")
        try:
            sentences[rid] = sentence_from_json(record)
        except CorpusError as err:
            raise CorpusError(f"sidecar line {lineno}: {err}") from err
    return sentences


def parse_corpus(text: str) -> CorpusBundle:
    """Parse blank-line-separated blocks, picking up inline annotations.

    Blocks without an ``::id`` get their 1-based corpus position as id.
    """
    chunks: list[tuple[dict[str, str], list[str]]] = []
    meta: dict[str, str] = {}
    body: list[str] = []

    def flush() -> None:
        nonlocal meta, body
        if meta or any(line.strip() for line in body):
            chunks.append((meta, body))
        meta, body = {}, []

    for line in text.splitlines():
        if not line.strip():
            flush()
            continue
        m = _META_RE.match(line)
        if m:
            meta[m.group(1)] = m.group(2).strip()
        elif line.lstrip().startswith("#"):
            continue
        else:
            body.append(line)
    flush()

    blocks: list[AmrBlock] = []
    sentences: dict[str, Sentence] = {}
    for position, (block_meta, block_body) in enumerate(chunks, 1):
        block_id = block_meta.get("id") or str(position)
        blocks.append(
            AmrBlock(
                id=block_id,
                snt=block_meta.get("snt", ""),
                tokens=tuple(block_meta.get("tok", "").split()),
                alignments=block_meta.get("alignments", ""),
                penman="\n".join(block_body).strip(),
            )
        )
        if "annotation" in block_meta:
            try:
                sentences[block_id] = sentence_from_json(json.loads(block_meta["annotation"]))
            except (json.JSONDecodeError, CorpusError) as err:
                raise CorpusError(f"block {block_id}: bad inline annotation: {err}") from err
    return CorpusBundle(blocks=tuple(blocks), sentences=sentences)


def format_block(block: AmrBlock, sentence: Sentence | None = None) -> str:
    lines = [f"# ::id {block.id}"]
    if block.snt:
        lines.append(f"# ::snt {block.snt}")
    if block.tokens:
        lines.append("# ::tok " + " ".join(block.tokens))
    if block.alignments:
        lines.append(f"# ::alignments {block.alignments}")
    if sentence is not None:
        record = json.dumps(sentence_to_json(sentence), ensure_ascii=False, sort_keys=True)
        lines.append(f"# ::annotation {record}")
    if block.penman:
        lines.append(block.penman)
    return "\n".join(lines)


def format_bundle(bundle: CorpusBundle) -> str:
    parts = [format_block(b, bundle.sentences.get(b.id)) for b in bundle.blocks]
    return "\n\n".join(parts) + "\n"


def load_bundle(corpus_path, annotations_path=None, check: bool = True) -> CorpusBundle:
    """Read a corpus (or bundle) file, merging a sidecar when given.

    With ``check`` (the default), annotations present anywhere must cover
    every block; pass False to let callers handle gaps per record.
    """
    bundle = parse_corpus(Path(corpus_path).read_text(encoding="utf-8"))
    if annotations_path is not None:
        sidecar = parse_sidecar(Path(annotations_path).read_text(encoding="utf-8"))
        bundle = replace(bundle, sentences={**bundle.sentences, **sidecar})
    if check and bundle.sentences:
        missing = bundle.missing_annotations()
        if missing:
            shown = ", ".join(missing[:8])
            raise CorpusError(f"annotations missing for block ids: {shown}")
    return bundle


def write_bundle(bundle: CorpusBundle, path) -> None:
    Path(path).write_text(format_bundle(bundle), encoding="utf-8")


def aligned_corpus(bundle: CorpusBundle) -> list[tuple[Sentence, AmrGraph, Alignment]]:
    """One (sentence, graph, alignment) triple per block."""
    triples = []
    for block in bundle.blocks:
        sentence = bundle.sentence_for(block)
        if sentence is None:
            raise CorpusError(f"block {block.id}: no tokens or annotations")
        graph = block.graph()
        triples.append((sentence, graph, block.alignment(graph)))
    return triples


# ---------------------------------------------------------------------------
# entity collapsing


def _split_tag(tag: str) -> tuple[str, str] | None:
    """(marker, type) for an entity tag, None for outside tokens."""
    if not tag or tag.upper() == "O":
        return None
    if tag[:2] in ("B-", "I-"):
        return (tag[0], tag[2:])
    return ("S", tag)


def entity_spans(ner: Sequence[str]) -> list[tuple[int, int]]:
    """Maximal same-entity runs as 0-based [start, end) spans.

    Accepts BIO tags (a B- opens a new span) or bare contiguous tags
    (equal adjacent tags merge); outside tokens are not spanned.
    """
    spans: list[tuple[int, int]] = []
    i = 0
    while i < len(ner):
        parsed = _split_tag(ner[i])
        if parsed is None:
            i += 1
            continue
        kind = parsed[1]
        j = i + 1
        while j < len(ner):
            nxt = _split_tag(ner[j])
            if nxt is None or nxt[1] != kind or nxt[0] == "B":
                break
            j += 1
        spans.append((i, j))
        i = j
    return spans


def collapse_with_map(sentence: Sentence) -> tuple[Sentence, dict[int, int]]:
    """Collapse multi-token entities; also map old to new 1-based indices.

    Tokens (and lemmas) of a span join with ``_``; the span keeps its last
    token's POS tag and its entity type with any B-/I- prefix stripped.
    Dependencies re-index through the map, dropping arcs internal to a span
    and duplicates the merge creates.
    """
    n = len(sentence)
    group_of = list(range(n))  # 0-based token -> 0-based output group
    spans = [s for s in entity_spans(sentence.ner) if s[1] - s[0] > 1]
    for start, end in spans:
        for k in range(start, end):
            group_of[k] = start
    groups = sorted({g for g in group_of})
    new_index = {g: i for i, g in enumerate(groups)}
    index_map = {old + 1: new_index[group_of[old]] + 1 for old in range(n)}

    members: dict[int, list[int]] = {g: [] for g in groups}
    for old, g in enumerate(group_of):
        members[g].append(old)

    def join(layer: Sequence[str]) -> tuple[str, ...]:
        return tuple("_".join(layer[k] for k in members[g]) for g in groups)

    def strip(tag: str) -> str:
        parsed = _split_tag(tag)
        return parsed[1] if parsed else tag

    tokens = join(sentence.tokens)
    lemmas = join(sentence.lemmas) if sentence.lemmas else ()
    pos = tuple(sentence.pos[members[g][-1]] for g in groups) if sentence.pos else ()
    ner = tuple(strip(sentence.ner[members[g][0]]) for g in groups) if sentence.ner else ()

    deps: list[tuple[int, int, str]] = []
    for head, dep, label in sentence.deps:
        new_head = index_map[head] if head else 0
        new_dep = index_map[dep]
        arc = (new_head, new_dep, label)
        if new_head == new_dep or arc in deps:
            continue
        deps.append(arc)

    collapsed = Sentence(tokens=tokens, lemmas=lemmas, pos=pos, ner=ner, deps=tuple(deps))
    return collapsed, index_map


def collapse_entities(sentence: Sentence) -> Sentence:
    """Merge every multi-token entity run into a single ``_``-joined token."""
    return collapse_with_map(sentence)[0]


# ---------------------------------------------------------------------------
# negation re-alignment


def realign_negations(
    graph: AmrGraph,
    alignment: Alignment,
    sentence: Sentence,
    lexicon: frozenset[str],
) -> Alignment:
    """Point each ``:polarity -`` constant at a negation word.

    Aligners routinely leave the ``-`` constant unaligned or stick it to
    the verb; when the sentence has a lexicon word (by token or lemma),
    the constant moves to the free one nearest its parent's token.
    """
    words = [t.lower() for t in sentence.tokens]
    lemmas = [l.lower() for l in sentence.lemmas] if sentence.lemmas else words
    candidates = [
        i for i in range(1, len(words) + 1)
        if words[i - 1] in lexicon or lemmas[i - 1] in lexicon
    ]
    if not candidates:
        return alignment
    polarity = [
        e for e in graph.edges
        if e.label == POLARITY
        and graph.node(e.dst).is_constant
        and graph.concept_of(e.dst) == NEGATIVE
    ]
    mapping = dict(alignment.node_to_token)
    claimed: set[int] = set()
    pending = []
    for edge in polarity:
        token = mapping.get(edge.dst)
        if token in candidates and token not in claimed:
            claimed.add(token)
        else:
            pending.append(edge)
    moved = False
    for edge in pending:
        free = [i for i in candidates if i not in claimed]
        if not free:
            break
        anchor = mapping.get(edge.src)
        if anchor is None:
            target = free[0]
        else:
            target = min(free, key=lambda i: (abs(i - anchor), i))
        mapping[edge.dst] = target
        claimed.add(target)
        moved = True
    return Alignment(mapping) if moved else alignment


# ---------------------------------------------------------------------------
# preprocessing


def preprocess_bundle(bundle: CorpusBundle, lexicon: frozenset[str] | None = None) -> CorpusBundle:
    """Collapse entities, re-index alignments, and fix negation alignments.

    Every block needs an annotation record; token lines and alignment
    texts are rewritten to match the collapsed sentences.
    """
    lexicon = lexicon if lexicon is not None else load_negation_lexicon()
    blocks: list[AmrBlock] = []
    sentences: dict[str, Sentence] = {}
    for block in bundle.blocks:
        sentence = bundle.sentences.get(block.id)
        if sentence is None:
            raise CorpusError(f"block {block.id}: no annotations")
        collapsed, index_map = collapse_with_map(sentence)
        align_text = block.alignments
        if block.penman:
            graph = block.graph()
            alignment = block.alignment(graph)
            remapped = {}
            for node_id, token in alignment.node_to_token.items():
                if token not in index_map:
                    raise CorpusError(
                        f"block {block.id}: alignment points at token {token} "
                        f"of {len(sentence)}"
                    )
                remapped[node_id] = index_map[token]
            realigned = realign_negations(graph, Alignment(remapped), collapsed, lexicon)
            align_text = format_alignments(realigned, graph)
        blocks.append(replace(block, tokens=collapsed.tokens, alignments=align_text))
        sentences[block.id] = collapsed
    return CorpusBundle(blocks=tuple(blocks), sentences=sentences)
