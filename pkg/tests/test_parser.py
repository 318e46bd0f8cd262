"""Tests for the model-driven parsing policy."""

import random

import numpy as np
import pytest

from helpers import (
    COORD_ALIGNMENT_MAP,
    COORD_GRAPH_TEXT,
    COORD_TOKENS,
    graphs_isomorphic,
    make_recoverable_gold,
)

from amreager.concepts import PhraseTable, allowed_labels, build_phrase_table
from amreager.graph import Alignment, ROOT, Sentence
from amreager.network import TrainConfig
from amreager.oracle import oracle_run
from amreager.parser import (
    ParsingModels,
    load_models,
    parse_sentence,
    predict_transition,
    save_models,
    train_parser,
)
from amreager.penman import parse_penman, serialize_penman
from amreager.transitions import initial

COORD_SENTENCE = Sentence(tokens=COORD_TOKENS)


def coord_corpus():
    gold = parse_penman(COORD_GRAPH_TEXT)
    return [(COORD_SENTENCE, gold, Alignment(dict(COORD_ALIGNMENT_MAP)))]


def overfit_config(**overrides):
    base = dict(word_dim=12, pos_dim=4, dep_dim=4, hidden=32, epochs=200, seed=5)
    base.update(overrides)
    return TrainConfig(**base)


def synthetic_corpus(n, seed, distinct=True):
    rng = random.Random(seed)
    corpus = []
    for k in range(n):
        sentence, gold, alignment = make_recoverable_gold(rng)
        if distinct:
            sentence = Sentence(tokens=tuple(f"s{k}_{t}" for t in sentence.tokens))
        corpus.append((sentence, gold, alignment))
    return corpus


def test_train_parser_requires_sentences():
    with pytest.raises(ValueError, match="empty corpus"):
        train_parser([])
    with pytest.raises(ValueError, match="no oracle steps"):
        train_parser([(Sentence(tokens=()), parse_penman("(b / boy)"), Alignment({}))])


def test_coordination_round_trip():
    models = train_parser(coord_corpus(), overfit_config())
    graph, log = parse_sentence(COORD_SENTENCE, models)
    graph.validate()
    assert not any(entry.forced for entry in log)
    assert graphs_isomorphic(graph, parse_penman(COORD_GRAPH_TEXT))
    actions = [entry.action for entry in log]
    assert actions == ["Shift", "Shift", "Shift", "LArc", "RArc", "Shift", "Shift", "RArc", "Reduce", "Reduce"]


def test_initial_state_forces_shift():
    models = train_parser(coord_corpus(), overfit_config(epochs=1))
    transition = predict_transition(models, initial(COORD_SENTENCE))
    assert transition.kind == "Shift"


def test_empty_buffer_forces_reduce():
    from amreager.transitions import RArc

    models = train_parser(coord_corpus(), overfit_config(epochs=1))
    config = initial(Sentence(tokens=("boy",)))
    config = config.apply(predict_transition(models, config))  # only Shift legal
    assert config.stack[-1] != ROOT and not config.buffer
    config = config.apply(RArc(":top"))
    # with the top edge placed, popping is the single legal move
    assert config.legal() == {"Reduce"}
    assert predict_transition(models, config).kind == "Reduce"


def test_parses_are_legal_and_terminate_with_unseen_words():
    corpus = synthetic_corpus(6, seed=31)
    models = train_parser(corpus, overfit_config(epochs=8))
    rng = random.Random(99)
    for _ in range(10):
        sentence, _, _ = make_recoverable_gold(rng)
        # unseen vocabulary everywhere
        sentence = Sentence(tokens=tuple(f"novel_{t}" for t in sentence.tokens))
        graph, log = parse_sentence(sentence, models)
        graph.validate()
        serialize_penman(graph)  # printable, i.e. a proper rooted structure


def test_predicted_labels_respect_admissibility():
    corpus = synthetic_corpus(8, seed=77)
    models = train_parser(corpus, overfit_config(epochs=12))
    checked = 0
    for sentence, _, _ in synthetic_corpus(6, seed=78):
        config = initial(sentence)
        while not config.is_terminal:
            transition = predict_transition(models, config)
            assert transition.kind in config.legal()
            if transition.kind == "LArc":
                allowed = allowed_labels(
                    config.concept_of(config.sigma(0)),
                    config.concept_of(config.sigma(1)),
                    models.arity_table,
                )
                assert transition.label in allowed
                checked += 1
            elif transition.kind == "RArc":
                allowed = allowed_labels(
                    config.concept_of(config.sigma(1)),
                    config.concept_of(config.sigma(0)),
                    models.arity_table,
                )
                assert transition.label in allowed
                checked += 1
            config = config.apply(transition)
    assert checked > 0


def test_entity_hook_fires_during_parse():
    # "Rome" tagged as a city must come out as the fixed city/:name/:wiki
    # subgraph even though the phrase table never saw it
    corpus = synthetic_corpus(4, seed=13)
    models = train_parser(corpus, overfit_config(epochs=8))
    sentence = Sentence(tokens=("Rome", "w0"), ner=("city", "o"))
    graph, _ = parse_sentence(sentence, models)
    concepts = {n.concept for n in graph.nodes}
    assert "city" in concepts and "name" in concepts
    wiki = [e for e in graph.edges if e.label == ":wiki"]
    assert len(wiki) == 1 and graph.node(wiki[0].dst).concept == "Rome"


def test_reentrancy_model_can_fire():
    # train on corpora rich in reentrancies, then confirm at least one
    # parse of a training sentence reproduces a reentrant edge
    rng = random.Random(3)
    corpus = []
    for k in range(40):
        sentence, gold, alignment = make_recoverable_gold(rng, reentrancy_prob=0.95)
        if any(len(gold.parents(n.id)) >= 2 for n in gold.nodes):
            corpus.append((sentence, gold, alignment))
    assert corpus
    reentrant_corpus = corpus[:6]
    models = train_parser(reentrant_corpus, overfit_config(epochs=150))
    assert models.reentrancy is not None
    fired = False
    for sentence, gold, _ in reentrant_corpus:
        graph, _ = parse_sentence(sentence, models)
        if any(len(graph.parents(n.id)) >= 2 for n in graph.nodes):
            fired = True
    assert fired


def test_bundle_save_load_round_trip(tmp_path):
    corpus = synthetic_corpus(5, seed=55)
    arity = {"want-01": frozenset({0, 1})}
    models = train_parser(corpus, overfit_config(epochs=5), arity_table=arity)
    save_models(models, tmp_path / "bundle")
    loaded = load_models(tmp_path / "bundle")
    assert loaded.arity_table == arity
    assert len(loaded.phrase_table) == len(models.phrase_table)
    for sentence, _, _ in corpus:
        before, _ = parse_sentence(sentence, models)
        after, _ = parse_sentence(sentence, loaded)
        assert serialize_penman(before) == serialize_penman(after)


def test_bundle_without_optional_models(tmp_path):
    # fully unaligned graphs degenerate to empty-Shift-only oracle runs:
    # no arcs, no reentrancies -> only the transition model and (empty
    # fragment) phrase table exist
    corpus = [
        (Sentence(tokens=("w", "x")), parse_penman("(w / want-01)"), Alignment({})),
        (Sentence(tokens=("v",)), parse_penman("(v / victory)"), Alignment({})),
    ]
    models = train_parser(corpus, overfit_config(epochs=2))
    assert models.labeler is None and models.reentrancy is None
    save_models(models, tmp_path / "b")
    loaded = load_models(tmp_path / "b")
    assert loaded.labeler is None and loaded.reentrancy is None
    graph, _ = parse_sentence(Sentence(tokens=("w",)), loaded)
    graph.validate()
