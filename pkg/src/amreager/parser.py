"""Greedy parsing: trained classifiers driving the transition machine.

The policy asks the transition model for the best legal action.  Shifts
consult the entity hooks first and fall back to the phrase table; arcs ask
the edge labeler, masked to the labels admissible between the two concepts;
Reduces consult the binary reentrancy model over the candidate sibling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .concepts import (
    PhraseTable,
    allowed_labels,
    apply_hooks,
    build_phrase_table,
    load_arity_table,
    lookup,
)
from .features import (
    REENTRANT_YES,
    extract_label_features,
    extract_reentrancy_features,
    extract_transition_features,
    training_examples,
)
from .graph import Alignment, AmrGraph, Sentence
from .network import FeedForwardModel, TrainConfig, train
from .oracle import oracle_run
from .transitions import (
    LARC,
    LArc,
    ParserSettings,
    RARC,
    RArc,
    REDUCE,
    Reduce,
    SHIFT,
    Shift,
    Configuration,
    LogEntry,
    Transition,
    greedy_parse,
    reentrancy_candidate,
)

# Tie-break order when the transition model has no opinion on any legal
# action (it never saw the kind in training): prefer to make progress
# without inventing structure.
_KIND_ORDER = (REDUCE, SHIFT, LARC, RARC)


@dataclass
class ParsingModels:
    """The trained pieces a parse needs, bundled.

    The labeler and reentrancy models are optional: a corpus without arcs
    (or without reentrancies) cannot train them, and the policy then falls
    back to admissible-label defaults / plain Reduces.
    """

    transition: FeedForwardModel
    labeler: FeedForwardModel | None
    reentrancy: FeedForwardModel | None
    phrase_table: PhraseTable
    arity_table: dict[str, frozenset[int]] | None = None


def _best_legal_kind(models: ParsingModels, config: Configuration) -> str:
    legal = config.legal()
    dist = models.transition.distribution(extract_transition_features(config))
    best, best_p = None, -1.0
    for kind in _KIND_ORDER:
        p = dist.get(kind, 0.0)
        if kind in legal and p > best_p:
            best, best_p = kind, p
    assert best is not None  # some transition is always legal pre-terminal
    return best


def _pick_label(
    models: ParsingModels,
    config: Configuration,
    src_concept: str,
    dst_concept: str,
    pair: tuple[str, str] | None = None,
) -> str:
    """Labeler argmax over the labels admissible between the two concepts;
    when the model knows none of them, fall back to :mod (or the smallest
    admissible label where :mod itself is excluded, e.g. under the root)."""
    allowed = allowed_labels(src_concept, dst_concept, models.arity_table)
    best, best_p = None, 0.0
    if models.labeler is not None:
        dist = models.labeler.distribution(extract_label_features(config, pair=pair))
        for label in models.labeler.classes:
            p = dist[label]
            if label in allowed and p > best_p:
                best, best_p = label, p
    if best is not None:
        return best
    return ":mod" if ":mod" in allowed else min(allowed)


def _shift_fragment(config: Configuration) -> tuple[str, Sentence, str]:
    front = config.beta(0)
    sentence = config.sentence
    token = sentence.tokens[front - 1]
    rest = Sentence(tokens=sentence.tokens[front:])
    return token, rest, f"x{front}_"


def predict_transition(models: ParsingModels, config: Configuration) -> Transition:
    kind = _best_legal_kind(models, config)
    sentence = config.sentence
    if kind == SHIFT:
        front = config.beta(0)
        token, rest, prefix = _shift_fragment(config)
        ner = sentence.ner[front - 1] if sentence.ner else None
        fragment = apply_hooks(token, ner, context=rest, prefix=prefix)
        if fragment is None:
            lemma = sentence.lemmas[front - 1] if sentence.lemmas else None
            pos = sentence.pos[front - 1] if sentence.pos else None
            fragment = lookup(models.phrase_table, token, lemma=lemma, pos=pos, prefix=prefix)
        return Shift(fragment)
    if kind == LARC:
        s0, s1 = config.sigma(0), config.sigma(1)
        return LArc(_pick_label(models, config, config.concept_of(s0), config.concept_of(s1)))
    if kind == RARC:
        s0, s1 = config.sigma(0), config.sigma(1)
        return RArc(_pick_label(models, config, config.concept_of(s1), config.concept_of(s0)))
    candidate = reentrancy_candidate(config)
    if candidate is not None and models.reentrancy is not None:
        fv = extract_reentrancy_features(config, candidate)
        if models.reentrancy.distribution(fv).get(REENTRANT_YES, 0.0) > 0.5:
            label = _pick_label(
                models,
                config,
                config.concept_of(candidate),
                config.concept_of(config.sigma(0)),
                pair=(config.sigma(0), candidate),
            )
            return Reduce(reentrant=(candidate, label))
    return Reduce()


def parse_sentence(
    sentence: Sentence,
    models: ParsingModels,
    settings: ParserSettings | None = None,
) -> tuple[AmrGraph, list[LogEntry]]:
    """Parse one annotated sentence into a graph, with the transition log."""
    return greedy_parse(sentence, lambda c: predict_transition(models, c), settings)


# ---------------------------------------------------------------------------
# training and persistence for the whole bundle


def train_parser(
    corpus: Sequence[tuple[Sentence, AmrGraph, Alignment]],
    config: TrainConfig | None = None,
    dev: Sequence[tuple[Sentence, AmrGraph, Alignment]] | None = None,
    pretrained_words: tuple[Sequence[str], "np.ndarray"] | None = None,
    arity_table: dict[str, frozenset[int]] | None = None,
    settings: ParserSettings | None = None,
) -> ParsingModels:
    """Oracle-run every aligned graph, then fit the three classifiers and
    the phrase table.  Classifiers whose dataset is empty or single-class
    (no arcs, no reentrancies) are left out of the bundle."""
    config = config or TrainConfig()
    runs = [oracle_run(s, g, a, settings) for s, g, a in corpus]
    if not runs:
        raise ValueError("cannot train on an empty corpus")
    table = build_phrase_table(runs)
    data = training_examples(runs)
    dev_data = None
    if dev is not None:
        dev_runs = [oracle_run(s, g, a, settings) for s, g, a in dev]
        dev_data = training_examples(dev_runs)

    if not data["transition"]:
        raise ValueError("corpus yields no oracle steps (are all sentences empty?)")

    def fit(name: str, binary: bool = False) -> FeedForwardModel | None:
        examples = data[name]
        labels = {label for _, label in examples}
        if not examples or (binary and len(labels) < 2):
            return None
        dev_split = None
        if dev_data is not None:
            dev_split = [e for e in dev_data[name] if e[1] in labels] or None
        pretrained = pretrained_words if name == "transition" else None
        return train(examples, config, dev=dev_split, pretrained_words=pretrained)

    return ParsingModels(
        transition=fit("transition"),
        labeler=fit("label"),
        reentrancy=fit("reentrancy", binary=True),
        phrase_table=table,
        arity_table=arity_table,
    )


def save_models(models: ParsingModels, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    parts = {"transition": True, "label": models.labeler is not None,
             "reentrancy": models.reentrancy is not None,
             "arity": models.arity_table is not None}
    (directory / "bundle.json").write_text(
        json.dumps({"format": 1, "parts": parts}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    models.transition.save(directory / "transition")
    if models.labeler is not None:
        models.labeler.save(directory / "label")
    if models.reentrancy is not None:
        models.reentrancy.save(directory / "reentrancy")
    models.phrase_table.save(directory / "phrases.tsv")
    if models.arity_table is not None:
        lines = [
            f"{frame}\t{','.join(str(n) for n in sorted(numbers))}"
            for frame, numbers in sorted(models.arity_table.items())
        ]
        (directory / "arity.tsv").write_text("".join(f"{l}\n" for l in lines), encoding="utf-8")


def load_models(directory) -> ParsingModels:
    directory = Path(directory)
    bundle = json.loads((directory / "bundle.json").read_text(encoding="utf-8"))
    if bundle["format"] != 1:
        raise ValueError(f"unsupported bundle format {bundle['format']}")
    parts = bundle["parts"]
    return ParsingModels(
        transition=FeedForwardModel.load(directory / "transition"),
        labeler=FeedForwardModel.load(directory / "label") if parts["label"] else None,
        reentrancy=FeedForwardModel.load(directory / "reentrancy") if parts["reentrancy"] else None,
        phrase_table=PhraseTable.load(directory / "phrases.tsv"),
        arity_table=load_arity_table(directory / "arity.tsv") if parts["arity"] else None,
    )
