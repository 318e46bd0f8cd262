"""Graph-matching evaluation: Smatch plus a fine-grained metric suite.

A graph is scored as a bag of triples.  Smatch searches for the injective
variable mapping that maximizes matched triples — exactly (brute force,
small graphs only) or by restarted hill-climbing.  On top of that sit
transformed variants (unlabeled, sense-stripped, reentrant edges only,
:ARG edges only) and plain multiset F-scores for concepts, named
entities, wikification and negations, where no variable matching is
needed.
"""

from __future__ import annotations

import itertools
import json
import random
import re
from collections import Counter
from dataclasses import dataclass

from .graph import AmrGraph, strip_sense

TOP_LABEL = ":top"
DUMMY_LABEL = ":rel"

UNLABELED = "unlabeled"
NO_WSD = "no_wsd"
REENTRANCY = "reentrancy"
SRL = "srl"
TRANSFORM_KINDS = (UNLABELED, NO_WSD, REENTRANCY, SRL)

CONCEPTS = "concepts"
NAMED_ENT = "named_ent"
WIKIFICATION = "wikification"
NEGATIONS = "negations"
BAG_KINDS = (CONCEPTS, NAMED_ENT, WIKIFICATION, NEGATIONS)

_SRL_RE = re.compile(r":ARG[0-9](-of)?")

BRUTEFORCE_MAX_VARS = 8
DEFAULT_RESTARTS = 4


@dataclass(frozen=True)
class TripleSet:
    """A graph reduced to matchable triples.

    ``instances`` are (variable, concept) pairs, ``relations`` are
    (variable, label, variable) and ``attributes`` are
    (variable, label, constant) — the top of the graph is kept as an
    attribute (var, ":top", concept) so that rooting participates in the
    score.  Triples count with multiplicity: transforms such as label
    removal can make distinct triples coincide, and each copy still needs
    its own partner to match.
    """

    instances: tuple[tuple[str, str], ...]
    relations: tuple[tuple[str, str, str], ...]
    attributes: tuple[tuple[str, str, str], ...]

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(var for var, _ in self.instances)

    def __len__(self) -> int:
        return len(self.instances) + len(self.relations) + len(self.attributes)


def graph_triples(graph: AmrGraph) -> TripleSet:
    """Decompose ``graph`` into instance, relation and attribute triples."""
    instances = []
    constants = {}
    for node in graph.nodes:
        if node.is_constant:
            constants[node.id] = node.concept
        else:
            instances.append((node.id, node.concept))
    relations = []
    attributes = []
    for edge in graph.edges:
        if edge.dst in constants:
            attributes.append((edge.src, edge.label, constants[edge.dst]))
        else:
            relations.append((edge.src, edge.label, edge.dst))
    if graph.top is not None and graph.top not in constants:
        attributes.append((graph.top, TOP_LABEL, graph.concept_of(graph.top)))
    return TripleSet(
        instances=tuple(instances),
        relations=tuple(relations),
        attributes=tuple(attributes),
    )


def _as_triples(graph_or_triples) -> TripleSet:
    if isinstance(graph_or_triples, TripleSet):
        return graph_or_triples
    return graph_triples(graph_or_triples)


def metric_transform(graph_or_triples, kind: str) -> TripleSet:
    """Project a graph onto the triples a fine-grained metric looks at."""
    ts = _as_triples(graph_or_triples)
    if kind == UNLABELED:
        return TripleSet(
            instances=ts.instances,
            relations=tuple((a, DUMMY_LABEL, b) for a, _, b in ts.relations),
            attributes=tuple((v, DUMMY_LABEL, c) for v, _, c in ts.attributes),
        )
    if kind == NO_WSD:
        return TripleSet(
            instances=tuple((v, strip_sense(c)) for v, c in ts.instances),
            relations=ts.relations,
            # the top attribute mirrors the root's concept: strip it too
            attributes=tuple(
                (v, label, strip_sense(c) if label == TOP_LABEL else c)
                for v, label, c in ts.attributes
            ),
        )
    if kind == REENTRANCY:
        indeg = Counter(dst for _, _, dst in ts.relations)
        kept = tuple(t for t in ts.relations if indeg[t[2]] >= 2)
    elif kind == SRL:
        kept = tuple(t for t in ts.relations if _SRL_RE.fullmatch(t[1]))
    else:
        raise ValueError(f"unknown metric transform {kind!r}")
    endpoints = {v for a, _, b in kept for v in (a, b)}
    return TripleSet(
        instances=tuple((v, c) for v, c in ts.instances if v in endpoints),
        relations=kept,
        attributes=(),
    )


# --- variable matching -------------------------------------------------

def _count_with_multiplicity(mapped_triples, gold_counts: Counter) -> int:
    n = 0
    seen: dict = {}
    for t in mapped_triples:
        limit = gold_counts.get(t, 0)
        if limit:
            k = seen.get(t, 0)
            if k < limit:
                n += 1
                seen[t] = k + 1
    return n


def _match_count(pred: TripleSet, gold: TripleSet, mapping: dict[str, str]) -> int:
    """Matched triples under a pred-variable -> gold-variable mapping."""
    return _match_count_fast(
        pred, Counter(gold.instances), Counter(gold.relations),
        Counter(gold.attributes), mapping)


def _match_count_fast(pred, gold_inst, gold_rel, gold_attr, mapping) -> int:
    n = _count_with_multiplicity(
        ((mapping.get(v), c) for v, c in pred.instances), gold_inst)
    n += _count_with_multiplicity(
        ((mapping.get(a), label, mapping.get(b))
         for a, label, b in pred.relations), gold_rel)
    n += _count_with_multiplicity(
        ((mapping.get(v), label, c) for v, label, c in pred.attributes),
        gold_attr)
    return n


def _prf(matched: int, pred_total: int, gold_total: int) -> tuple[float, float, float]:
    if pred_total == 0 and gold_total == 0:
        return (1.0, 1.0, 1.0)
    if pred_total == 0 or gold_total == 0:
        return (0.0, 0.0, 0.0)
    return (matched / pred_total, matched / gold_total,
            2 * matched / (pred_total + gold_total))


def best_match(pred, gold, restarts: int = DEFAULT_RESTARTS, seed=0) -> tuple[int, int, int]:
    """(matched, pred total, gold total) for the best mapping found.

    Restarted steepest-ascent hill-climbing: the first start maps
    variables to same-concept partners (preferring equal names, so a
    graph scores perfectly against itself), later starts are random
    injections.  Moves re-target one variable or swap two images.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    ts_p = _as_triples(pred)
    ts_g = _as_triples(gold)
    pred_vars = list(ts_p.variables)
    gold_vars = list(ts_g.variables)
    gold_inst = Counter(ts_g.instances)
    gold_rel = Counter(ts_g.relations)
    gold_attr = Counter(ts_g.attributes)
    rng = random.Random(seed)

    def rescore(candidate: dict[str, str]) -> int:
        return _match_count_fast(ts_p, gold_inst, gold_rel, gold_attr, candidate)

    def single_and_swap_moves(mapping: dict[str, str]):
        used = set(mapping.values())
        for v in pred_vars:
            for g in gold_vars + [None]:
                if g == mapping.get(v) or (g in used and g != mapping.get(v)):
                    continue
                candidate = dict(mapping)
                if g is None:
                    candidate.pop(v, None)
                else:
                    candidate[v] = g
                yield candidate
        for v1, v2 in itertools.combinations(pred_vars, 2):
            if mapping.get(v1) == mapping.get(v2):
                continue
            candidate = dict(mapping)
            i1, i2 = candidate.pop(v1, None), candidate.pop(v2, None)
            if i2 is not None:
                candidate[v1] = i2
            if i1 is not None:
                candidate[v2] = i1
            yield candidate

    def anchor_moves(mapping: dict[str, str]):
        # Matching a relation needs both endpoints moved at once; single
        # moves gain nothing halfway there, so try those jumps directly,
        # evicting whichever variables currently hold the target images.
        matched_rel = {(a, l, b) for a, l, b in ts_p.relations
                       if (mapping.get(a), l, mapping.get(b)) in gold_rel}
        holder = {g: v for v, g in mapping.items()}
        for a, label, b in ts_p.relations:
            if (a, label, b) in matched_rel or a == b:
                continue
            for u, glabel, w in ts_g.relations:
                if glabel != label or u == w:
                    continue
                candidate = dict(mapping)
                for var in (holder.get(u), holder.get(w)):
                    if var is not None:
                        candidate.pop(var, None)
                candidate[a] = u
                candidate[b] = w
                yield candidate

    def ascend(mapping: dict[str, str]) -> tuple[int, dict[str, str]]:
        score = rescore(mapping)
        while True:
            best_gain, best_map = 0, None
            for candidate in single_and_swap_moves(mapping):
                gain = rescore(candidate) - score
                if gain > best_gain:
                    best_gain, best_map = gain, candidate
            if best_map is None:
                for candidate in anchor_moves(mapping):
                    gain = rescore(candidate) - score
                    if gain > best_gain:
                        best_gain, best_map = gain, candidate
            if best_map is None:
                return score, mapping
            score, mapping = score + best_gain, best_map

    def climb(mapping: dict[str, str]) -> int:
        # Steepest ascent, then kicks: a relation anchor may pay off only
        # after the rest of the mapping re-settles around it, so try each
        # jump followed by a fresh ascent and keep any strict improvement.
        score, mapping = ascend(mapping)
        improved = True
        while improved:
            improved = False
            for candidate in anchor_moves(mapping):
                kicked_score, kicked = ascend(candidate)
                if kicked_score > score:
                    score, mapping, improved = kicked_score, kicked, True
                    break
        return score

    def concept_start() -> dict[str, str]:
        concept_of_g = dict(ts_g.instances)
        by_concept: dict[str, list[str]] = {}
        for g, c in ts_g.instances:
            by_concept.setdefault(c, []).append(g)
        mapping: dict[str, str] = {}
        used: set[str] = set()
        for v, c in ts_p.instances:
            pool = [g for g in by_concept.get(c, ()) if g not in used]
            if not pool:
                continue
            # prefer the same variable name among equal-concept candidates
            choice = v if v in pool and concept_of_g.get(v) == c else pool[0]
            mapping[v] = choice
            used.add(choice)
        return mapping

    def random_start() -> dict[str, str]:
        shuffled = gold_vars[:]
        rng.shuffle(shuffled)
        return dict(zip(rng.sample(pred_vars, len(pred_vars)), shuffled))

    best_score = -1
    for attempt in range(restarts):
        start = concept_start() if attempt == 0 else random_start()
        score = climb(start)
        if score > best_score:
            best_score = score
    return best_score, len(ts_p), len(ts_g)


def smatch(pred, gold, restarts: int = DEFAULT_RESTARTS, seed=0) -> tuple[float, float, float]:
    """Approximate (precision, recall, F1) over matched triples."""
    return _prf(*best_match(pred, gold, restarts=restarts, seed=seed))


def smatch_bruteforce(pred, gold) -> tuple[float, float, float]:
    """Exact optimum by exhausting injective mappings (small graphs only)."""
    ts_p = _as_triples(pred)
    ts_g = _as_triples(gold)
    swap = len(ts_g.variables) < len(ts_p.variables)
    small, large = (ts_g, ts_p) if swap else (ts_p, ts_g)
    if len(small.variables) > BRUTEFORCE_MAX_VARS:
        raise ValueError(
            f"brute-force matcher handles at most {BRUTEFORCE_MAX_VARS} "
            f"variables, got {len(small.variables)}")
    large_inst = Counter(large.instances)
    large_rel = Counter(large.relations)
    large_attr = Counter(large.attributes)
    small_vars = list(small.variables)
    large_vars = list(large.variables)

    best = 0

    def extend(i: int, mapping: dict[str, str], used: set[str]) -> None:
        nonlocal best
        if i == len(small_vars):
            score = _match_count_fast(small, large_inst, large_rel, large_attr, mapping)
            if score > best:
                best = score
            return
        v = small_vars[i]
        extend(i + 1, mapping, used)
        for g in large_vars:
            if g in used:
                continue
            mapping[v] = g
            used.add(g)
            extend(i + 1, mapping, used)
            del mapping[v]
            used.discard(g)

    extend(0, {}, set())
    return _prf(best, len(ts_p), len(ts_g))


# --- multiset metrics --------------------------------------------------

def bag_counts(kind: str, graph: AmrGraph) -> Counter:
    """The multiset a bag metric compares, extracted from one graph."""
    constants = {n.id: n.concept for n in graph.nodes if n.is_constant}
    if kind == CONCEPTS:
        return Counter(n.concept for n in graph.nodes if not n.is_constant)
    if kind == NAMED_ENT:
        bag: Counter = Counter()
        for edge in graph.edges:
            if edge.label != ":name" or edge.dst in constants:
                continue
            ops = sorted(
                (e for e in graph.children(edge.dst)
                 if re.fullmatch(r":op[0-9]+", e.label) and e.dst in constants),
                key=lambda e: int(e.label[3:]))
            bag[(graph.concept_of(edge.src),
                 tuple(constants[e.dst] for e in ops))] += 1
        return bag
    if kind == WIKIFICATION:
        return Counter(constants[e.dst] for e in graph.edges
                       if e.label == ":wiki" and e.dst in constants)
    if kind == NEGATIONS:
        return Counter(graph.concept_of(e.src) for e in graph.edges
                       if e.label == ":polarity" and constants.get(e.dst) == "-")
    raise ValueError(f"unknown bag metric {kind!r}")


def fscore_bags(kind: str, pred: AmrGraph, gold: AmrGraph) -> tuple[float, float, float]:
    """Multiset F-score; no variable matching is involved."""
    bag_p = bag_counts(kind, pred)
    bag_g = bag_counts(kind, gold)
    matched = sum((bag_p & bag_g).values())
    return _prf(matched, sum(bag_p.values()), sum(bag_g.values()))


# --- corpus-level suite ------------------------------------------------

METRIC_ORDER = (
    "smatch", UNLABELED, NO_WSD, "np_only",
    REENTRANCY, CONCEPTS, NAMED_ENT, WIKIFICATION, NEGATIONS, SRL,
)
METRIC_TITLES = {
    "smatch": "Smatch",
    UNLABELED: "Unlabeled",
    NO_WSD: "No WSD",
    "np_only": "NP-only",
    REENTRANCY: "Reentrancy",
    CONCEPTS: "Concepts",
    NAMED_ENT: "Named Ent.",
    WIKIFICATION: "Wikification",
    NEGATIONS: "Negations",
    SRL: "SRL",
}


def percent(value: float) -> int:
    """Half-up integer percentage, the table's reporting convention."""
    return int(value * 100 + 0.5)


@dataclass(frozen=True)
class MetricReport:
    """Micro-averaged (P, R, F1) per metric, each in [0, 1]."""

    scores: dict[str, tuple[float, float, float]]

    def __getitem__(self, metric: str) -> tuple[float, float, float]:
        return self.scores[metric]

    def f1_percent(self, metric: str) -> int:
        return percent(self.scores[metric][2])

    def render(self) -> str:
        width = max(len(t) for t in METRIC_TITLES.values())
        lines = [f"{'Metric':<{width}}  {'P':>4} {'R':>4} {'F1':>4}"]
        for key in METRIC_ORDER:
            if key not in self.scores:
                continue
            p, r, f1 = self.scores[key]
            lines.append(f"{METRIC_TITLES[key]:<{width}}  "
                         f"{percent(p):>4} {percent(r):>4} {percent(f1):>4}")
        return "\n".join(lines)

    def to_json(self) -> str:
        payload = {
            key: {"p": round(p * 100, 1), "r": round(r * 100, 1),
                  "f1": round(f1 * 100, 1)}
            for key in METRIC_ORDER
            if key in self.scores
            for p, r, f1 in [self.scores[key]]
        }
        return json.dumps(payload, indent=2, sort_keys=False)


def _micro(counts: list[tuple[int, int, int]]) -> tuple[float, float, float]:
    """Corpus-level P/R/F1 from per-sentence (matched, pred, gold) counts.

    Zero totals give zero scores: a metric with no support anywhere in
    either corpus reports 0, matching the reference suite's output.
    """
    matched = sum(m for m, _, _ in counts)
    pred_total = sum(p for _, p, _ in counts)
    gold_total = sum(g for _, _, g in counts)
    p = matched / pred_total if pred_total else 0.0
    r = matched / gold_total if gold_total else 0.0
    f1 = 2 * matched / (pred_total + gold_total) if pred_total + gold_total else 0.0
    return (p, r, f1)


def _pair_up(pred_corpus, gold_corpus, pred_ids, gold_ids):
    if pred_ids is not None and gold_ids is not None:
        missing = [i for i in gold_ids if i not in set(pred_ids)]
        extra = [i for i in pred_ids if i not in set(gold_ids)]
        if missing or extra:
            raise ValueError(
                "corpora do not cover the same ids: "
                f"missing from predictions {missing!r}, unmatched {extra!r}")
        by_id = dict(zip(pred_ids, pred_corpus))
        return [(by_id[i], g) for i, g in zip(gold_ids, gold_corpus)]
    if len(pred_corpus) != len(gold_corpus):
        raise ValueError(
            f"corpus length mismatch: {len(pred_corpus)} predictions "
            f"vs {len(gold_corpus)} gold graphs")
    return list(zip(pred_corpus, gold_corpus))


def evaluate_suite(
    pred_corpus,
    gold_corpus,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 42,
    pred_ids=None,
    gold_ids=None,
    np_pred=None,
    np_gold=None,
) -> MetricReport:
    """Run every metric corpus-wide and micro-average the counts.

    Corpora are sequences of AmrGraph, paired by id when both id lists
    are given and by position otherwise.  Each sentence gets its own RNG
    stream derived from (seed, index) so results do not depend on
    evaluation order.
    """
    pairs = _pair_up(list(pred_corpus), list(gold_corpus), pred_ids, gold_ids)

    def sentence_seed(index: int) -> int:
        return seed * 1_000_003 + index

    smatch_counts = []
    transform_counts = {kind: [] for kind in TRANSFORM_KINDS}
    bag_counts_acc = {kind: [] for kind in BAG_KINDS}
    for i, (pred, gold) in enumerate(pairs):
        ts_p, ts_g = graph_triples(pred), graph_triples(gold)
        smatch_counts.append(
            best_match(ts_p, ts_g, restarts=restarts, seed=sentence_seed(i)))
        for kind in TRANSFORM_KINDS:
            transform_counts[kind].append(best_match(
                metric_transform(ts_p, kind), metric_transform(ts_g, kind),
                restarts=restarts, seed=sentence_seed(i)))
        for kind in BAG_KINDS:
            bag_p = bag_counts(kind, pred)
            bag_g = bag_counts(kind, gold)
            bag_counts_acc[kind].append((
                sum((bag_p & bag_g).values()),
                sum(bag_p.values()), sum(bag_g.values())))

    scores = {"smatch": _micro(smatch_counts)}
    for kind in (UNLABELED, NO_WSD):
        scores[kind] = _micro(transform_counts[kind])
    if np_pred is not None and np_gold is not None:
        np_pairs = _pair_up(list(np_pred), list(np_gold), None, None)
        scores["np_only"] = _micro([
            best_match(p, g, restarts=restarts, seed=sentence_seed(i))
            for i, (p, g) in enumerate(np_pairs)])
    scores[REENTRANCY] = _micro(transform_counts[REENTRANCY])
    for kind in BAG_KINDS:
        scores[kind] = _micro(bag_counts_acc[kind])
    scores[SRL] = _micro(transform_counts[SRL])
    return MetricReport(scores={k: scores[k] for k in METRIC_ORDER if k in scores})
