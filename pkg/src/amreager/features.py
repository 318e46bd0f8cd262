"""Feature templates for the transition, edge-label and reentrancy classifiers.

Each extractor reads a parser configuration and fills a fixed, versioned
slot layout with symbols: words, POS tags, entity tags, dependency labels,
and bucketed counts.  Vocabulary indexing and embedding lookups happen in
the model layer; here everything stays symbolic so templates can be tested
without a trained model.

Positions that do not exist (short stack or buffer, missing parent/child,
no dependency arc between two tokens) are filled with dedicated padding
symbols rather than dropped, so every vector has the same shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .graph import ROOT, Sentence
from .transitions import Configuration, LARC, RARC, REDUCE, SHIFT

# Symbol for positions that do not exist at all.
PAD = "<pad>"
# Symbol for a token pair that exists but has no dependency arc.
NO_ARC = "<none>"
# Symbol the vocabulary maps unseen words to at parse time.
UNK = "<unk>"

# Scalar features (fragment depth, child/parent counts) are clipped here
# and fed as one-hot buckets; unbounded integers destabilize small nets.
SCALAR_CLIP = 10
SCALAR_BUCKETS = SCALAR_CLIP + 1

TRANSITION_TEMPLATE = "transition/v1"
LABEL_TEMPLATE = "label/v1"
REENTRANCY_TEMPLATE = "reentrancy/v1"

# Slots per channel (words, pos, deps, entities, scalars, flags).
TEMPLATE_SHAPES = {
    TRANSITION_TEMPLATE: (10, 4, 18, 4, 6, 3),
    LABEL_TEMPLATE: (8, 2, 2, 2, 6, 0),
    REENTRANCY_TEMPLATE: (3, 3, 2, 0, 0, 0),
}


@dataclass(frozen=True)
class FeatureVector:
    """One extracted example: symbols per channel plus the template name."""

    template: str
    words: tuple[str, ...]
    pos: tuple[str, ...]
    deps: tuple[str, ...]
    entities: tuple[str, ...]
    scalars: tuple[int, ...]
    flags: tuple[int, ...] = ()

    @property
    def slots(self) -> int:
        """Slot count excluding the extra sparse flags."""
        return (
            len(self.words) + len(self.pos) + len(self.deps)
            + len(self.entities) + len(self.scalars)
        )

    def __post_init__(self) -> None:
        shape = TEMPLATE_SHAPES.get(self.template)
        if shape is None:
            raise ValueError(f"unknown feature template {self.template!r}")
        actual = (
            len(self.words), len(self.pos), len(self.deps),
            len(self.entities), len(self.scalars), len(self.flags),
        )
        if actual != shape:
            raise ValueError(f"template {self.template} expects {shape}, got {actual}")


class _View:
    """Lookups from stack/buffer positions to sentence-layer symbols."""

    def __init__(self, config: Configuration):
        self.config = config
        self.sentence: Sentence = config.sentence

    # node ids (or None) -> 1-based token index, 0 for the artificial root
    def token(self, node_id: str | None) -> int | None:
        if node_id is None:
            return None
        return self.config.token_of(node_id)

    def word(self, token: int | None) -> str:
        if not token:  # None or the artificial root's 0
            return PAD
        return self.sentence.tokens[token - 1]

    def pos(self, token: int | None) -> str:
        if not token or not self.sentence.pos:
            return PAD
        return self.sentence.pos[token - 1]

    def entity(self, token: int | None) -> str:
        if not token or not self.sentence.ner:
            return PAD
        return self.sentence.ner[token - 1]

    def dep(self, head: int | None, dependent: int | None) -> str:
        if not head or not dependent:
            return PAD
        return self.sentence.dep_label(head, dependent) or NO_ARC

    def node_word(self, node_id: str | None) -> str:
        return self.word(self.token(node_id))

    def node_pos(self, node_id: str | None) -> str:
        return self.pos(self.token(node_id))

    def node_entity(self, node_id: str | None) -> str:
        return self.entity(self.token(node_id))

    def node_dep(self, a: str | None, b: str | None) -> str:
        return self.dep(self.token(a), self.token(b))

    # -- leftmost relatives, ordered by the token that introduced them ----

    def _leftmost(self, entries) -> str | None:
        best: tuple[tuple[int, int], str] | None = None
        for other, _label, _kind, seq in entries:
            key = (self.config.token_of(other), seq)
            if best is None or key < best[0]:
                best = (key, other)
        return best[1] if best else None

    def leftmost_parent(self, node_id: str | None) -> str | None:
        if node_id is None:
            return None
        return self._leftmost(self.config.parents_of(node_id))

    def leftmost_child(self, node_id: str | None) -> str | None:
        if node_id is None:
            return None
        return self._leftmost(self.config.children_of(node_id))

    def leftmost_grandchild(self, node_id: str | None) -> str | None:
        return self.leftmost_child(self.leftmost_child(node_id))

    # -- clipped scalars ---------------------------------------------------

    def depth(self, node_id: str | None) -> int:
        if node_id is None:
            return 0
        return min(self.config.depth_of(node_id), SCALAR_CLIP)

    def n_children(self, node_id: str | None) -> int:
        if node_id is None:
            return 0
        return min(len(self.config.children_of(node_id)), SCALAR_CLIP)

    def n_parents(self, node_id: str | None) -> int:
        if node_id is None:
            return 0
        return min(len(self.config.parents_of(node_id)), SCALAR_CLIP)

    def relatives(self, node_id: str | None) -> tuple[str | None, str | None, str | None]:
        parent = self.leftmost_parent(node_id)
        child = self.leftmost_child(node_id)
        return parent, child, self.leftmost_child(child)


def extract_transition_features(config: Configuration) -> FeatureVector:
    """The full state template: stack top two, buffer front four, their
    leftmost relatives, and the dependency arcs among all those tokens."""
    v = _View(config)
    s0, s1 = config.sigma(0), config.sigma(1)
    b = [config.beta(i) for i in range(4)]
    p0, c0, cc0 = v.relatives(s0)
    p1, c1, cc1 = v.relatives(s1)
    t0, t1 = v.token(s0), v.token(s1)

    words = (
        v.node_word(s0), v.node_word(s1), v.word(b[0]), v.word(b[1]),
        v.node_word(p0), v.node_word(c0), v.node_word(cc0),
        v.node_word(p1), v.node_word(c1), v.node_word(cc1),
    )
    pos = (v.node_pos(s0), v.node_pos(s1), v.pos(b[0]), v.pos(b[1]))
    entities = (v.node_entity(s0), v.node_entity(s1), v.entity(b[0]), v.entity(b[1]))
    deps = (
        v.dep(t0, t1), v.dep(t1, t0),
        v.dep(t0, b[0]), v.dep(b[0], t0),
        v.dep(t1, b[0]), v.dep(b[0], t1),
        v.dep(b[0], b[1]), v.dep(b[1], b[0]),
        v.dep(b[0], b[2]), v.dep(b[2], b[0]),
        v.dep(b[0], b[3]), v.dep(b[3], b[0]),
        v.dep(t0, b[1]), v.dep(b[1], t0),
        v.dep(t0, b[2]), v.dep(b[2], t0),
        v.dep(t0, b[3]), v.dep(b[3], t0),
    )
    scalars = (
        v.depth(s0), v.depth(s1),
        v.n_children(s0), v.n_children(s1),
        v.n_parents(s0), v.n_parents(s1),
    )
    flags = (
        int(s0 == ROOT),
        int(not config.buffer),
        int(t0 is not None and b[0] is not None and t0 == b[0]),
    )
    return FeatureVector(
        template=TRANSITION_TEMPLATE,
        words=words, pos=pos, deps=deps, entities=entities,
        scalars=scalars, flags=flags,
    )


def extract_label_features(
    config: Configuration, pair: tuple[str, str] | None = None
) -> FeatureVector:
    """Template for labeling an arc between the top two stack nodes.

    ``pair`` overrides the two positions: it is (σ₀, sibling) when the
    edge being labeled is the reentrant one added by a Reduce.
    """
    v = _View(config)
    if pair is None:
        a, b = config.sigma(0), config.sigma(1)
    else:
        a, b = pair
    pa, ca, cca = v.relatives(a)
    pb, cb, ccb = v.relatives(b)
    front = config.beta(0)

    words = (
        v.node_word(a), v.node_word(b),
        v.node_word(pa), v.node_word(ca), v.node_word(cca),
        v.node_word(pb), v.node_word(cb), v.node_word(ccb),
    )
    pos = (v.node_pos(a), v.node_pos(b))
    entities = (v.node_entity(a), v.node_entity(b))
    deps = (v.dep(v.token(a), front), v.dep(front, v.token(a)))
    scalars = (
        v.depth(a), v.depth(b),
        v.n_children(a), v.n_children(b),
        v.n_parents(a), v.n_parents(b),
    )
    return FeatureVector(
        template=LABEL_TEMPLATE,
        words=words, pos=pos, deps=deps, entities=entities, scalars=scalars,
    )


def extract_reentrancy_features(config: Configuration, sibling: str) -> FeatureVector:
    """Template for the binary decision at Reduce time: connect the most
    recently attached sibling to the node being popped, or not.

    Uses the two nodes plus their shared parent (the most recent arc
    parent of the popped node) and the dependency arcs between the two.
    """
    v = _View(config)
    popped = config.sigma(0)
    parent = None
    best_seq = -1
    for other, _label, kind, seq in config.parents_of(popped):
        if kind in (LARC.lower(), RARC.lower()) and seq > best_seq:
            parent, best_seq = other, seq
    words = (v.node_word(sibling), v.node_word(popped), v.node_word(parent))
    pos = (v.node_pos(sibling), v.node_pos(popped), v.node_pos(parent))
    deps = (v.node_dep(sibling, popped), v.node_dep(popped, sibling))
    return FeatureVector(
        template=REENTRANCY_TEMPLATE,
        words=words, pos=pos, deps=deps, entities=(), scalars=(),
    )


# ---------------------------------------------------------------------------
# training examples from oracle runs

REENTRANT_YES = "yes"
REENTRANT_NO = "no"


def training_examples(runs) -> dict[str, list[tuple[FeatureVector, str]]]:
    """Flatten oracle runs into (features, gold decision) pairs for the
    three classifiers.

    Transition examples carry the action kind; label examples the gold
    edge label (from arcs, and from reentrant Reduces with the pair
    override); reentrancy examples a yes/no for each Reduce that had a
    candidate sibling.
    """
    data: dict[str, list[tuple[FeatureVector, str]]] = {
        "transition": [],
        "label": [],
        "reentrancy": [],
    }
    for run in runs:
        for step in getattr(run, "steps", run):
            config = step.config
            kind = step.transition.kind
            data["transition"].append((extract_transition_features(config), kind))
            if kind in (LARC, RARC):
                data["label"].append((extract_label_features(config), step.edge_label))
            elif kind == REDUCE and step.reentrancy_candidate is not None:
                candidate = step.reentrancy_candidate
                decision = REENTRANT_YES if step.reentrancy_positive else REENTRANT_NO
                data["reentrancy"].append(
                    (extract_reentrancy_features(config, candidate), decision)
                )
                if step.reentrancy_positive:
                    pair = (config.sigma(0), candidate)
                    data["label"].append(
                        (extract_label_features(config, pair=pair), step.edge_label)
                    )
    return data


def feature_vector_to_json(fv: FeatureVector) -> dict:
    return {
        "template": fv.template,
        "words": list(fv.words),
        "pos": list(fv.pos),
        "deps": list(fv.deps),
        "entities": list(fv.entities),
        "scalars": list(fv.scalars),
        "flags": list(fv.flags),
    }


def feature_vector_from_json(record: dict) -> FeatureVector:
    return FeatureVector(
        template=record["template"],
        words=tuple(record["words"]),
        pos=tuple(record["pos"]),
        deps=tuple(record["deps"]),
        entities=tuple(record["entities"]),
        scalars=tuple(record["scalars"]),
        flags=tuple(record.get("flags", ())),
    )


def training_examples_from_dump(text: str) -> dict[str, list[tuple[FeatureVector, str]]]:
    """Rebuild classifier datasets from an oracle dump (JSON lines).

    Yields exactly what :func:`training_examples` produces on the runs the
    dump was written from; per-run summary lines are skipped.
    """
    data: dict[str, list[tuple[FeatureVector, str]]] = {
        "transition": [],
        "label": [],
        "reentrancy": [],
    }
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        if "summary" in record:
            continue
        data["transition"].append(
            (feature_vector_from_json(record["transition"]), record["action"])
        )
        if "label" in record:
            data["label"].append(
                (feature_vector_from_json(record["label"]), record["edge_label"])
            )
        if "reentrancy" in record:
            decision = REENTRANT_YES if record["reentrancy_positive"] else REENTRANT_NO
            data["reentrancy"].append(
                (feature_vector_from_json(record["reentrancy"]), decision)
            )
    return data
