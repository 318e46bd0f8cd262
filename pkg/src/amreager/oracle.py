"""Static oracle: derive the transition sequence for a gold graph.

Given a sentence, a gold graph and an alignment, the oracle picks one
transition per configuration by checking, in order:

1. a gold edge from the stack top to the node below it -> LArc with that
   label;
2. a gold edge from the node below (or the artificial root) to the top ->
   RArc with that label;
3. no gold edge between the stack top and any fragment root still in the
   buffer -> Reduce, adding the reentrant edge from the most recent sibling
   when the gold graph contains it;
4. otherwise Shift with the fragment the alignment assigns to the first
   buffer token.

Only edges between fragment roots can ever be built, so condition 3 ignores
gold edges that touch non-root fragment nodes; those edges are unreachable
for the transition system and waiting for them would only block the stack.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from .align import token_fragment
from .features import (
    extract_label_features,
    extract_reentrancy_features,
    extract_transition_features,
    feature_vector_to_json,
)
from .graph import Alignment, AmrGraph, Fragment, ROOT, Sentence, TOP_LABEL, Edge
from .transitions import (
    Configuration,
    LArc,
    LogEntry,
    ParserSettings,
    RArc,
    Reduce,
    Shift,
    Transition,
    assemble_graph,
    initial,
    log_entry,
    reentrancy_candidate,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleStep:
    """A configuration paired with the transition the oracle chose in it.

    ``edge_label`` carries the gold label of an LArc/RArc (or of the
    reentrant edge of a Reduce).  When a Reduce had an eligible sibling,
    ``reentrancy_candidate`` names it and ``reentrancy_positive`` says
    whether the gold graph wanted the edge — one binary training example.
    """

    config: Configuration
    transition: Transition
    edge_label: str | None = None
    reentrancy_candidate: str | None = None
    reentrancy_positive: bool | None = None


@dataclass
class OracleRun:
    steps: list[OracleStep]
    graph: AmrGraph
    log: list[LogEntry]
    report: dict


class _GoldContext:
    def __init__(self, sentence: Sentence, gold: AmrGraph, alignment: Alignment):
        self.gold = gold
        self.alignment = alignment
        self.fragments: dict[int, Fragment] = {
            t: token_fragment(gold, alignment, t) for t in range(1, len(sentence) + 1)
        }
        self.pair_labels: dict[tuple[str, str], list[str]] = {}
        for e in gold.edges:
            self.pair_labels.setdefault((e.src, e.dst), []).append(e.label)
        if gold.top is not None:
            self.pair_labels[(ROOT, gold.top)] = [TOP_LABEL]
        self.root_of: dict[int, str | None] = {
            t: (f.root if not f.is_empty else None) for t, f in self.fragments.items()
        }

    def labels_between(self, src: str, dst: str) -> list[str]:
        return self.pair_labels.get((src, dst), [])

    def connects_to_buffer(self, node_id: str, buffer: tuple[int, ...]) -> bool:
        for token in buffer:
            root = self.root_of.get(token)
            if root is None:
                continue
            if self.labels_between(node_id, root) or self.labels_between(root, node_id):
                return True
        return False


def oracle_transition(config: Configuration, ctx: _GoldContext) -> Transition:
    legal = config.legal()
    s0, s1 = config.sigma(0), config.sigma(1)
    if s0 is not None and s1 is not None:
        if "LArc" in legal:
            for label in ctx.labels_between(s0, s1):
                if not config.has_arc_between(s0, s1):
                    return LArc(label)
        if "RArc" in legal:
            for label in ctx.labels_between(s1, s0):
                if not config.has_arc_between(s1, s0):
                    return RArc(label)
    if (
        "Reduce" in legal
        and s0 is not None
        and not ctx.connects_to_buffer(s0, config.buffer)
    ):
        sibling = reentrancy_candidate(config)
        if sibling is not None:
            for label in ctx.labels_between(sibling, s0):
                return Reduce(reentrant=(sibling, label))
        return Reduce()
    if "Shift" in legal:
        return Shift(ctx.fragments[config.buffer[0]])
    # Unreachable for well-formed inputs: some transition is always legal
    # until the terminal configuration.
    raise RuntimeError("oracle found no applicable transition")


def _make_step(config: Configuration, transition: Transition) -> OracleStep:
    label = getattr(transition, "label", None)
    candidate = None
    positive = None
    if isinstance(transition, Reduce):
        candidate = reentrancy_candidate(config)
        if candidate is not None:
            positive = transition.reentrant is not None
        if transition.reentrant is not None:
            label = transition.reentrant[1]
    return OracleStep(
        config=config,
        transition=transition,
        edge_label=label,
        reentrancy_candidate=candidate,
        reentrancy_positive=positive,
    )


def oracle_run(
    sentence: Sentence,
    gold: AmrGraph,
    alignment: Alignment,
    settings: ParserSettings | None = None,
) -> OracleRun:
    """Run the oracle to termination and report how much of gold it rebuilt."""
    settings = settings or ParserSettings()
    unaligned = [n.id for n in gold.nodes if n.id not in alignment]
    if unaligned:
        log.warning(
            "%d gold nodes have no alignment and will be dropped: %s",
            len(unaligned),
            ", ".join(sorted(unaligned)[:8]),
        )
    ctx = _GoldContext(sentence, gold, alignment)
    config = initial(sentence)
    steps: list[OracleStep] = []
    entries: list[LogEntry] = []
    budget = settings.budget(len(sentence))
    while not config.is_terminal and config.step < budget:
        transition = oracle_transition(config, ctx)
        after = config.apply(transition)
        steps.append(_make_step(config, transition))
        entries.append(log_entry(config, after, transition))
        config = after
    while not config.is_terminal:
        transition = Reduce() if config.sigma(0) != ROOT else Shift(Fragment())
        after = config.apply(transition)
        steps.append(_make_step(config, transition))
        entries.append(log_entry(config, after, transition, forced=True))
        config = after
    graph = assemble_graph(config)
    fragment_edges: set[Edge] = set()
    for step in steps:
        fragment = getattr(step.transition, "fragment", None)
        if fragment is not None and not fragment.is_empty:
            fragment_edges.update(fragment.graph.edges)
    report = _coverage_report(config.edges, fragment_edges, gold, unaligned, len(steps))
    return OracleRun(steps=steps, graph=graph, log=entries, report=report)


def _coverage_report(
    built: tuple[Edge, ...],
    fragment_edges: set[Edge],
    gold: AmrGraph,
    unaligned: list[str],
    transitions: int,
) -> dict:
    """Recovered-edge counts.  Edges arriving inside Shift fragments are
    part of the reconstruction, so they count next to machine-built arcs."""
    gold_edges = set(gold.edges)
    if gold.top is not None:
        gold_edges.add(Edge(ROOT, TOP_LABEL, gold.top))
    built_set = set(built) | fragment_edges
    correct = len(built_set & gold_edges)
    precision = correct / len(built_set) if built_set else 1.0
    recall = correct / len(gold_edges) if gold_edges else 1.0
    return {
        "transitions": transitions,
        "edges_built": len(built_set),
        "edges_gold": len(gold_edges),
        "edges_correct": correct,
        "edge_precision": precision,
        "edge_recall": recall,
        "unaligned_gold_nodes": len(unaligned),
    }


def dump_run(run: OracleRun) -> str:
    """JSON lines for one run: a record per step, then a summary line.

    Each record carries the extracted feature values next to the gold
    decisions, so classifier datasets can be rebuilt from the dump alone
    (see ``training_examples_from_dump``).
    """
    lines = []
    for index, step in enumerate(run.steps):
        config = step.config
        kind = step.transition.kind
        record: dict = {
            "step": index,
            "action": kind,
            "transition": feature_vector_to_json(extract_transition_features(config)),
        }
        if kind in ("LArc", "RArc"):
            record["edge_label"] = step.edge_label
            record["label"] = feature_vector_to_json(extract_label_features(config))
        elif kind == "Reduce" and step.reentrancy_candidate is not None:
            record["reentrancy_candidate"] = step.reentrancy_candidate
            record["reentrancy_positive"] = bool(step.reentrancy_positive)
            record["reentrancy"] = feature_vector_to_json(
                extract_reentrancy_features(config, step.reentrancy_candidate)
            )
            if step.reentrancy_positive:
                pair = (config.sigma(0), step.reentrancy_candidate)
                record["edge_label"] = step.edge_label
                record["label"] = feature_vector_to_json(
                    extract_label_features(config, pair=pair)
                )
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    summary = {
        "oracle_precision": run.report["edge_precision"],
        "oracle_recall": run.report["edge_recall"],
        "unaligned_nodes": run.report["unaligned_gold_nodes"],
    }
    lines.append(json.dumps({"summary": summary}, sort_keys=True))
    return "\n".join(lines) + "\n"
