"""Command-line entry point: preprocess, train, parse, evaluate, oracle, stats.

One binary ties the pipeline together.  Every command exits 0 only when no
per-record error occurred; record-level problems (a sentence that cannot be
parsed, a block without annotations) are reported on stderr, counted, and
turn the exit code nonzero, while unusable inputs abort with exit code 2.

The worker pool for parsing is capped by the AMREAGER_THREADS environment
variable; results are emitted strictly in input order.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .concepts import load_arity_table, load_negation_lexicon
from .corpus import (
    AmrBlock,
    CorpusBundle,
    CorpusError,
    aligned_corpus,
    load_bundle,
    preprocess_bundle,
    write_bundle,
)
from .evaluation import DEFAULT_RESTARTS, evaluate_suite
from .graph import EMPTY_PARSE, Sentence
from .network import TrainConfig, load_embeddings
from .oracle import dump_run, oracle_run
from .parser import load_models, parse_sentence, save_models, train_parser
from .penman import serialize_penman
from .projectivity import corpus_stats
from .transitions import render_trace

log = logging.getLogger(__name__)

EMPTY_FLAG = "# ::flag empty-parse"
SKIP_FLAG = "# ::flag skipped missing-annotations"


def _max_workers() -> int:
    workers = os.cpu_count() or 1
    env = os.environ.get("AMREAGER_THREADS")
    if env:
        try:
            workers = min(workers, max(1, int(env)))
        except ValueError:
            raise ValueError(f"AMREAGER_THREADS must be an integer, got {env!r}") from None
    return workers


def _record_error(errors: list[str], message: str) -> None:
    errors.append(message)
    print(f"error: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# preprocess


def cmd_preprocess(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.corpus, args.annotations)
    lexicon = load_negation_lexicon(args.negation_lexicon)
    done = preprocess_bundle(bundle, lexicon=lexicon)
    write_bundle(done, args.out)
    merged = sum(
        len(bundle.sentences[b.id]) - len(done.sentences[b.id]) for b in bundle.blocks
    )
    print(f"preprocessed {len(done)} blocks ({merged} entity tokens merged) -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# train


def _micro_ceiling(reports: list[dict]) -> dict:
    built = sum(r["edges_built"] for r in reports)
    gold = sum(r["edges_gold"] for r in reports)
    correct = sum(r["edges_correct"] for r in reports)
    return {
        "sentences": len(reports),
        "transitions": sum(r["transitions"] for r in reports),
        "oracle_precision": correct / built if built else 1.0,
        "oracle_recall": correct / gold if gold else 1.0,
        "unaligned_nodes": sum(r["unaligned_gold_nodes"] for r in reports),
    }


def cmd_train(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.corpus, args.annotations)
    corpus = aligned_corpus(bundle)
    if all(len(alignment) == 0 for _, _, alignment in corpus):
        raise CorpusError(
            "corpus has no alignments; run the JAMR aligner and supply "
            "::alignments lines before training"
        )
    dev = aligned_corpus(load_bundle(args.dev)) if args.dev else None

    pretrained = None
    config = TrainConfig(epochs=args.epochs, seed=args.seed)
    if args.embeddings:
        vocab, matrix = load_embeddings(args.embeddings, seed=args.seed)
        config = TrainConfig(
            epochs=args.epochs, seed=args.seed, word_dim=matrix.shape[1]
        )
        pretrained = (vocab.symbols, matrix)
    arity = load_arity_table(args.arity_table) if args.arity_table else None

    models = train_parser(
        corpus, config, dev=dev, pretrained_words=pretrained, arity_table=arity
    )
    out = Path(args.out)
    save_models(models, out)

    runs = [oracle_run(s, g, a) for s, g, a in corpus]
    ceiling = _micro_ceiling([run.report for run in runs])
    (out / "oracle-report.json").write_text(
        json.dumps(ceiling, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    history = {
        name: model.history
        for name, model in (
            ("transition", models.transition),
            ("label", models.labeler),
            ("reentrancy", models.reentrancy),
        )
        if model is not None
    }
    (out / "train-log.json").write_text(
        json.dumps(history, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    print(f"trained on {len(corpus)} sentences -> {out}")
    print(
        "oracle ceiling: precision "
        f"{ceiling['oracle_precision']:.3f}, recall {ceiling['oracle_recall']:.3f}, "
        f"{ceiling['unaligned_nodes']} unaligned gold nodes"
    )
    for name, records in history.items():
        last = records[-1]
        line = f"{name}: {len(records)} epochs, final loss {last['loss']:.4f}"
        if "dev_accuracy" in last:
            best = max(r["dev_accuracy"] for r in records)
            line += f", best dev accuracy {best:.3f}"
        print(line)
    return 0


# ---------------------------------------------------------------------------
# parse


def _parse_sentence_for(block: AmrBlock, bundle: CorpusBundle) -> Sentence | None:
    """Annotation record when annotations are in play, else the tok line."""
    if bundle.sentences:
        return bundle.sentences.get(block.id)
    if block.tokens:
        return Sentence(tokens=block.tokens)
    return None


def cmd_parse(args: argparse.Namespace) -> int:
    models = load_models(args.model)
    bundle = load_bundle(args.corpus, args.annotations, check=False)
    errors: list[str] = []

    def parse_one(block: AmrBlock) -> tuple[AmrBlock, str | None, str | None]:
        sentence = _parse_sentence_for(block, bundle)
        if sentence is None:
            return block, None, f"block {block.id}: missing annotations"
        graph, _ = parse_sentence(sentence, models)
        if graph.top is None or not graph.nodes:
            return block, None, None
        return block, serialize_penman(graph), None

    outputs: list[str] = []
    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        for block, penman, failure in pool.map(parse_one, bundle.blocks):
            lines = [f"# ::id {block.id}"]
            snt = block.snt or " ".join(block.tokens)
            if snt:
                lines.append(f"# ::snt {snt}")
            if failure is not None:
                _record_error(errors, failure)
                lines.append(SKIP_FLAG)
                lines.append(EMPTY_PARSE)
            elif penman is None:
                lines.append(EMPTY_FLAG)
                lines.append(EMPTY_PARSE)
            else:
                lines.append(penman)
            outputs.append("\n".join(lines))

    text = "\n\n".join(outputs) + ("\n" if outputs else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 1 if errors else 0


# ---------------------------------------------------------------------------
# evaluate


def _graphs_of(path) -> tuple[list, list[str]]:
    bundle = load_bundle(path, check=False)
    graphs, ids = [], []
    for block in bundle.blocks:
        graphs.append(block.graph())
        ids.append(block.id)
    return graphs, ids


def cmd_evaluate(args: argparse.Namespace) -> int:
    pred, pred_ids = _graphs_of(args.pred)
    gold, gold_ids = _graphs_of(args.gold)
    np_pred = np_gold = None
    if args.np_corpus:
        np_pred, _ = _graphs_of(args.np_corpus[0])
        np_gold, _ = _graphs_of(args.np_corpus[1])
    report = evaluate_suite(
        pred,
        gold,
        restarts=args.restarts,
        seed=args.seed,
        pred_ids=pred_ids,
        gold_ids=gold_ids,
        np_pred=np_pred,
        np_gold=np_gold,
    )
    if args.json == "-":
        print(report.to_json())
    else:
        print(report.render())
        if args.json:
            Path(args.json).write_text(report.to_json() + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.corpus, args.annotations)
    corpus = aligned_corpus(bundle)
    runs = [(block, oracle_run(s, g, a)) for block, (s, g, a) in zip(bundle.blocks, corpus)]
    if args.trace:
        for block, run in runs:
            sentence = bundle.sentence_for(block)
            print(f"# ::id {block.id}")
            print(render_trace(run.log, sentence))
            print()
    if args.out:
        text = "".join(dump_run(run) for _, run in runs)
        Path(args.out).write_text(text, encoding="utf-8")
    ceiling = _micro_ceiling([run.report for _, run in runs])
    if args.json:
        print(json.dumps(ceiling, indent=2, sort_keys=True))
    else:
        print(
            f"{ceiling['sentences']} sentences, {ceiling['transitions']} transitions"
        )
        print(
            "oracle ceiling: precision "
            f"{ceiling['oracle_precision']:.3f}, recall {ceiling['oracle_recall']:.3f}, "
            f"{ceiling['unaligned_nodes']} unaligned gold nodes"
        )
    return 0


# ---------------------------------------------------------------------------
# stats


def cmd_stats(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.corpus, args.annotations, check=False)
    pairs = []
    for block in bundle.blocks:
        graph = block.graph()
        pairs.append((graph, block.alignment(graph)))
    stats = corpus_stats(pairs)
    if args.json:
        print(json.dumps(stats, indent=2, sort_keys=True))
        return 0
    width = max(len(key) for key in stats)
    for key, value in stats.items():
        shown = f"{value:.1f}%" if key.startswith("pct_") else str(value)
        print(f"{key.ljust(width)}  {shown}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amreager",
        description="Left-to-right transition-based AMR parsing toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="collapse entities and fix alignments")
    p.add_argument("--corpus", required=True, help="AMR corpus file")
    p.add_argument("--annotations", help="JSON-lines annotation sidecar")
    p.add_argument("--negation-lexicon", help="extra negation words, one per line")
    p.add_argument("--out", required=True, help="bundle file to write")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train the classifiers from an aligned bundle")
    p.add_argument("--corpus", required=True, help="preprocessed training bundle")
    p.add_argument("--annotations", help="JSON-lines annotation sidecar")
    p.add_argument("--dev", help="development bundle for early stopping")
    p.add_argument("--embeddings", help="pretrained word embeddings (text format)")
    p.add_argument("--arity-table", help="frame arity table (TSV)")
    p.add_argument("--out", required=True, help="model directory to write")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse annotated sentences into AMR")
    p.add_argument("--model", required=True, help="trained model directory")
    p.add_argument("--corpus", required=True, help="sentences to parse (block format)")
    p.add_argument("--annotations", help="JSON-lines annotation sidecar")
    p.add_argument("--out", help="output AMR file (default: stdout)")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("evaluate", help="score predicted AMRs against gold")
    p.add_argument("pred", help="predicted AMR file")
    p.add_argument("gold", help="gold AMR file")
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument(
        "--np-corpus",
        nargs=2,
        metavar=("NP_PRED", "NP_GOLD"),
        help="noun-phrase-only corpora for the NP-only row",
    )
    p.add_argument("--json", metavar="PATH", help="write the JSON report ('-': stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="run the training oracle and report its ceiling")
    p.add_argument("--corpus", required=True, help="aligned AMR bundle")
    p.add_argument("--annotations", help="JSON-lines annotation sidecar")
    p.add_argument("--trace", action="store_true", help="print per-sentence traces")
    p.add_argument("--out", help="write the JSON-lines training dump here")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stats", help="projectivity and reentrancy statistics")
    p.add_argument("--corpus", required=True, help="aligned AMR corpus")
    p.add_argument("--annotations", help="JSON-lines annotation sidecar")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
