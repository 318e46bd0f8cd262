"""Tests for the symbolic feature templates."""

import random

import pytest

from helpers import COORD_ALIGNMENT_MAP, COORD_GRAPH_TEXT, COORD_TOKENS, make_recoverable_gold

from amreager.features import (
    FeatureVector,
    LABEL_TEMPLATE,
    NO_ARC,
    PAD,
    REENTRANCY_TEMPLATE,
    REENTRANT_NO,
    REENTRANT_YES,
    SCALAR_CLIP,
    TRANSITION_TEMPLATE,
    extract_label_features,
    extract_reentrancy_features,
    extract_transition_features,
    training_examples,
)
from amreager.graph import Alignment, AmrGraph, Fragment, Node, ROOT, Sentence
from amreager.oracle import oracle_run
from amreager.penman import parse_penman
from amreager.transitions import LArc, RArc, Reduce, Shift, initial

# The coordination sentence with full annotation layers, so every channel
# has real symbols to pick up.
COORD_LAYERED = Sentence(
    tokens=COORD_TOKENS,
    lemmas=("the", "boy", "and", "the", "girl"),
    pos=("DT", "NN", "CC", "DT", "NN"),
    ner=("o", "o", "o", "o", "o"),
    deps=((2, 1, "det"), (3, 2, "conj"), (0, 3, "root"), (5, 4, "det"), (3, 5, "conj")),
)


def frag(node_id: str, concept: str) -> Fragment:
    node = Node(id=node_id, concept=concept)
    return Fragment(graph=AmrGraph(nodes=(node,), edges=()), root=node_id)


def apply_all(sentence, transitions):
    config = initial(sentence)
    for t in transitions:
        config = config.apply(t)
    return config


def coord_oracle_run():
    gold = parse_penman(COORD_GRAPH_TEXT)
    return oracle_run(COORD_LAYERED, gold, Alignment(dict(COORD_ALIGNMENT_MAP)))


# -- slot counts -------------------------------------------------------------


def test_template_slot_arithmetic():
    # independent recount of each template's channel widths
    assert 10 + 4 + 18 + 4 + 6 == 42
    assert 8 + 2 + 2 + 2 + 6 == 20
    assert 3 + 3 + 2 == 8


def test_slot_counts_on_random_configurations():
    rng = random.Random(4047)
    seen = 0
    for _ in range(150):
        sentence, gold, alignment = make_recoverable_gold(rng)
        run = oracle_run(sentence, gold, alignment)
        for step in run.steps:
            fv = extract_transition_features(step.config)
            assert fv.template == TRANSITION_TEMPLATE and fv.slots == 42
            assert all(isinstance(w, str) for w in fv.words + fv.pos + fv.deps + fv.entities)
            assert all(0 <= s <= SCALAR_CLIP for s in fv.scalars)
            if step.transition.kind in ("LArc", "RArc"):
                lv = extract_label_features(step.config)
                assert lv.template == LABEL_TEMPLATE and lv.slots == 20
            if step.transition.kind == "Reduce" and step.reentrancy_candidate:
                rv = extract_reentrancy_features(step.config, step.reentrancy_candidate)
                assert rv.template == REENTRANCY_TEMPLATE and rv.slots == 8
            seen += 1
    assert seen >= 1000


# -- transition template -----------------------------------------------------


def test_initial_configuration_padding():
    fv = extract_transition_features(initial(COORD_LAYERED))
    # stack holds only the artificial root: both stack word slots pad out,
    # the buffer slots see the sentence
    assert fv.words[:4] == (PAD, PAD, "the", "boy")
    assert fv.words[4:] == (PAD,) * 6
    assert fv.pos == (PAD, PAD, "DT", "NN")
    assert fv.entities == (PAD, PAD, "o", "o")
    # arcs touching the stack pad out; buffer-internal pairs are real
    # token pairs, labeled or not
    assert fv.deps[:6] == (PAD,) * 6
    assert fv.deps[6:12] == (NO_ARC, "det", NO_ARC, NO_ARC, NO_ARC, NO_ARC)
    assert fv.deps[12:] == (PAD,) * 6
    assert fv.scalars == (0, 0, 0, 0, 0, 0)
    assert fv.flags == (1, 0, 0)


RICH_SENTENCE = Sentence(
    tokens=tuple(f"w{i}" for i in range(1, 12)),
    pos=tuple(f"P{i}" for i in range(1, 12)),
    ner=tuple(f"E{i}" for i in range(1, 12)),
    deps=((5, 2, "conj"), (8, 5, "det")),
)

# Builds stack [∘, n1, n2, n5] with buffer [8..11]: n2 has parent n1,
# children n3 and n5, grandchild n4; n5 has parent n2, child n6,
# grandchild n7.
RICH_TRANSITIONS = [
    Shift(frag("n1", "c1")),
    Shift(frag("n2", "c2")),
    RArc(":ARG0"),
    Shift(frag("n3", "c3")),
    RArc(":ARG1"),
    Shift(frag("n4", "c4")),
    RArc(":mod"),
    Reduce(),
    Reduce(),
    Shift(frag("n5", "c5")),
    RArc(":ARG2"),
    Shift(frag("n6", "c6")),
    RArc(":poss"),
    Shift(frag("n7", "c7")),
    RArc(":time"),
    Reduce(),
    Reduce(),
]


def test_full_context_leaves_no_padding():
    config = apply_all(RICH_SENTENCE, RICH_TRANSITIONS)
    assert config.stack == (ROOT, "n1", "n2", "n5")
    fv = extract_transition_features(config)
    assert PAD not in fv.words
    assert PAD not in fv.pos
    assert PAD not in fv.deps
    assert PAD not in fv.entities


def test_relative_slots_pick_leftmost_by_alignment():
    config = apply_all(RICH_SENTENCE, RICH_TRANSITIONS)
    fv = extract_transition_features(config)
    # (s0, s1, b0, b1, parent/child/grandchild of s0, then of s1); n2's
    # leftmost child is n3 (token 3), not n5
    assert fv.words == ("w5", "w2", "w8", "w9", "w2", "w6", "w7", "w1", "w3", "w4")
    assert fv.pos == ("P5", "P2", "P8", "P9")
    assert fv.entities == ("E5", "E2", "E8", "E9")
    assert fv.deps[0] == "conj"  # 5 -> 2
    assert fv.deps[3] == "det"  # 8 -> 5
    assert all(d == NO_ARC for i, d in enumerate(fv.deps) if i not in (0, 3))
    assert fv.scalars == (1, 1, 1, 2, 1, 1)
    assert fv.flags == (0, 0, 0)


def test_buffer_empty_flag_and_scalar_clipping():
    n = 13
    sentence = Sentence(tokens=tuple(f"t{i}" for i in range(n)))
    transitions = [Shift(frag("p", "head"))]
    for i in range(1, n):
        transitions += [Shift(frag(f"k{i}", "kid")), RArc(":mod"), Reduce()]
    config = apply_all(sentence, transitions)
    assert config.stack == (ROOT, "p") and not config.buffer
    fv = extract_transition_features(config)
    assert fv.scalars[2] == SCALAR_CLIP  # 12 children, clipped
    assert fv.flags == (0, 1, 0)


# -- label template ----------------------------------------------------------


def test_label_features_at_coordination_arc_steps():
    run = coord_oracle_run()
    kinds = [s.transition.kind for s in run.steps]
    assert kinds == ["Shift"] * 3 + ["LArc", "RArc", "Shift", "Shift", "RArc", "Reduce", "Reduce"]

    larc = run.steps[3]
    fv = extract_label_features(larc.config)
    assert fv.words[:2] == ("and", "boy")
    assert fv.words[2:] == (PAD,) * 6  # no arcs built yet at that point
    assert fv.pos == ("CC", "NN")
    assert fv.entities == ("o", "o")
    assert fv.deps == (NO_ARC, NO_ARC)  # "and" vs. buffer front "the"
    assert fv.scalars == (1, 1, 0, 0, 0, 0)

    rarc = run.steps[7]  # stack [∘, and, girl], adding :op2
    fv = extract_label_features(rarc.config)
    assert fv.words[:2] == ("girl", "and")
    assert fv.words[6] == "boy"  # leftmost child of "and"


def test_label_pair_override():
    config = apply_all(RICH_SENTENCE, RICH_TRANSITIONS)
    fv = extract_label_features(config, pair=("n3", "n6"))
    assert fv.words[:2] == ("w3", "w6")
    assert fv.pos == ("P3", "P6")
    default = extract_label_features(config)
    assert default.words[:2] == ("w5", "w2")


# -- reentrancy template -----------------------------------------------------


def test_reentrancy_features_on_coordination():
    run = coord_oracle_run()
    reduce_step = run.steps[8]  # popping "girl"; sibling candidate "boy"
    assert reduce_step.reentrancy_candidate == "b"
    assert reduce_step.reentrancy_positive is False
    fv = extract_reentrancy_features(reduce_step.config, "b")
    assert fv.words == ("boy", "girl", "and")  # sibling, popped, shared parent
    assert fv.pos == ("NN", "NN", "CC")
    assert fv.deps == (NO_ARC, NO_ARC)


def test_reentrancy_features_with_dep_arcs():
    sentence = Sentence(
        tokens=("p", "s", "b"),
        deps=((2, 3, "nsubj"), (3, 2, "dep")),
    )
    config = apply_all(
        sentence,
        [
            Shift(frag("p", "parent")),
            Shift(frag("s", "sib")),
            RArc(":ARG0"),
            Reduce(),
            Shift(frag("b", "kid")),
            RArc(":ARG1"),
        ],
    )
    fv = extract_reentrancy_features(config, "s")
    assert fv.words == ("s", "b", "p")
    assert fv.deps == ("nsubj", "dep")


# -- shape validation --------------------------------------------------------


def test_vector_shape_is_validated():
    with pytest.raises(ValueError, match="expects"):
        FeatureVector(
            template=REENTRANCY_TEMPLATE,
            words=("a",), pos=("b", "c", "d"), deps=("e", "f"),
            entities=(), scalars=(),
        )
    with pytest.raises(ValueError, match="unknown feature template"):
        FeatureVector(
            template="transition/v999",
            words=(), pos=(), deps=(), entities=(), scalars=(),
        )


# -- training example emission -----------------------------------------------


def test_training_examples_from_coordination():
    run = coord_oracle_run()
    data = training_examples([run])

    kinds = [label for _, label in data["transition"]]
    assert kinds == ["Shift", "Shift", "Shift", "LArc", "RArc", "Shift", "Shift", "RArc", "Reduce", "Reduce"]
    assert all(fv.template == TRANSITION_TEMPLATE for fv, _ in data["transition"])

    labels = [label for _, label in data["label"]]
    assert labels == [":op1", ":top", ":op2"]

    assert len(data["reentrancy"]) == 1
    fv, decision = data["reentrancy"][0]
    assert decision == REENTRANT_NO
    assert fv.words == ("boy", "girl", "and")


def test_training_examples_accepts_step_lists():
    run = coord_oracle_run()
    assert training_examples([run.steps]) == training_examples([run])


def test_reentrant_reduce_emits_positive_and_label_example():
    rng = random.Random(7)
    found = False
    for _ in range(200):
        sentence, gold, alignment = make_recoverable_gold(rng, reentrancy_prob=0.9)
        run = oracle_run(sentence, gold, alignment)
        steps = [
            s for s in run.steps
            if s.transition.kind == "Reduce" and s.reentrancy_positive
        ]
        if not steps:
            continue
        found = True
        data = training_examples([run])
        yes = [1 for _, d in data["reentrancy"] if d == REENTRANT_YES]
        assert len(yes) == len(steps)
        # each positive Reduce also contributes a labeled example for the
        # reentrant edge, beyond the one-per-arc examples
        arcs = sum(1 for s in run.steps if s.transition.kind in ("LArc", "RArc"))
        assert len(data["label"]) == arcs + len(steps)
        for step in steps:
            pair_fv = extract_label_features(
                step.config, pair=(step.config.sigma(0), step.reentrancy_candidate)
            )
            assert any(fv == pair_fv for fv, _ in data["label"])
        break
    assert found
