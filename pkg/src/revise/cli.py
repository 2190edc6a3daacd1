"""Command-line entry point: datagen, eval-fim, eval-coherence, serve, stats."""

from __future__ import annotations

import argparse
import json
import sys

from revise import datagen, metrics, study
from revise.scorers import NGramScorer, RemoteScorer, UniformScorer
from revise.service import ConfigError, ServiceConfig, backend_from_spec, run_service
from revise.tokenization import Vocabulary, tokenize


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revise",
        description="Interactive summary-editing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate an infill training set from a corpus")
    p.add_argument("--corpus", required=True, help="JSONL corpus of {id, document, summary}")
    p.add_argument("--out", required=True, help="output JSONL path (manifest written alongside)")
    p.add_argument("--gamma", type=float, default=0.5, help="corner-case proportion")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-middle-len", type=int, default=0)

    p = sub.add_parser("eval-fim", help="split-protocol generation quality (ROUGE)")
    p.add_argument("--testset", required=True, help="JSONL corpus used as the test set")
    p.add_argument(
        "--backend",
        required=True,
        help="heuristic | random[:seed] | scripted:echo | scripted:replies.json | remote:URL",
    )
    p.add_argument("--mode", required=True, choices=metrics.EVAL_MODES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-new-tokens", type=int, default=64)
    p.add_argument("--timeout-s", type=float, default=10.0)

    p = sub.add_parser("eval-coherence", help="fixed-horizon likelihood coherence")
    p.add_argument("--testset", required=True)
    p.add_argument(
        "--scorer",
        required=True,
        help="ngram:<train-corpus.jsonl> | remote:URL | uniform:<vocab-size>",
    )
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--backend",
        default=None,
        help="optional: score generated middles from this backend instead of golden ones",
    )
    p.add_argument("--max-new-tokens", type=int, default=64)

    p = sub.add_parser("serve", help="run the annotation portal service")
    p.add_argument("--config", required=True, help="JSON config file (env REVISE_* overrides)")

    p = sub.add_parser("stats", help="aggregate a study event log")
    p.add_argument("--log", required=True)
    p.add_argument("--format", choices=("json", "table"), default="json")

    return parser


def _cmd_datagen(args) -> int:
    records = datagen.read_corpus(args.corpus)
    cfg = datagen.GenConfig(
        gamma=args.gamma, seed=args.seed, min_middle_len=args.min_middle_len
    )
    vocab = Vocabulary()
    examples, skipped = datagen.generate_training_set(records, vocab, cfg)
    datagen.write_examples(examples, args.out, vocab)
    manifest = datagen.build_manifest(records, cfg, len(examples))
    manifest["skipped"] = skipped
    manifest_path = args.out + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        json.dumps(
            {"examples": len(examples), "skipped": len(skipped), "manifest": manifest_path}
        )
    )
    return 0


def _cmd_eval_fim(args) -> int:
    records = datagen.read_corpus(args.testset)
    vocab = Vocabulary()
    backend = backend_from_spec(args.backend, vocab, timeout_s=args.timeout_s)
    items = metrics.eval_items_from_corpus(records, vocab, args.mode, args.seed)
    report = metrics.evaluate_infill(
        items, backend, args.mode, max_new_tokens=args.max_new_tokens
    )
    print(
        json.dumps(
            {
                "rouge1": report.rouge1.f1,
                "rouge2": report.rouge2.f1,
                "n_items": report.n_items,
                "n_failed": report.n_failed,
                "n_skipped": report.n_skipped,
                "mode": report.mode,
                "seed": args.seed,
                "detail": {
                    "rouge1": {
                        "precision": report.rouge1.precision,
                        "recall": report.rouge1.recall,
                        "f1": report.rouge1.f1,
                    },
                    "rouge2": {
                        "precision": report.rouge2.precision,
                        "recall": report.rouge2.recall,
                        "f1": report.rouge2.f1,
                    },
                },
            }
        )
    )
    return 0


def _scorer_from_spec(spec: str, vocab: Vocabulary):
    kind, _, arg = spec.partition(":")
    if kind == "ngram":
        if not arg:
            raise ConfigError("ngram scorer needs a training corpus: ngram:corpus.jsonl")
        train = datagen.read_corpus(arg)
        sequences = [tokenize(r.summary, vocab) for r in train]
        return NGramScorer(sequences)
    if kind == "remote":
        if not arg:
            raise ConfigError("remote scorer needs a URL: remote:http://host:port")
        return RemoteScorer(arg, vocab)
    if kind == "uniform":
        return UniformScorer(int(arg) if arg else 1000)
    raise ConfigError(f"unknown scorer spec {spec!r}")


def _cmd_eval_coherence(args) -> int:
    records = datagen.read_corpus(args.testset)
    vocab = Vocabulary()
    scorer = _scorer_from_spec(args.scorer, vocab)
    backend = (
        backend_from_spec(args.backend, vocab) if args.backend is not None else None
    )
    items = metrics.eval_items_from_corpus(records, vocab, "middle", args.seed)
    report = metrics.evaluate_coherence(
        items,
        scorer,
        metrics.CoherenceConfig(horizon=args.horizon),
        backend=backend,
        max_new_tokens=args.max_new_tokens,
    )
    print(
        json.dumps(
            {
                "l1_mean": report.l1_mean,
                "l2_mean": report.l2_mean,
                "n_items": report.n_items,
                "n_l1": report.n_l1,
                "n_l2": report.n_l2,
                "n_failed": report.n_failed,
                "horizon": report.horizon,
                "middles": report.middles,
                "seed": args.seed,
            }
        )
    )
    return 0


def _cmd_serve(args) -> int:
    config = ServiceConfig.from_file(args.config)
    run_service(config)
    return 0


def _cmd_stats(args) -> int:
    log = study.EventLog(args.log)
    agg = study.aggregate(log)
    if args.format == "table":
        print(study.render_table(agg))
    else:
        print(json.dumps(agg.to_obj(), indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "datagen": _cmd_datagen,
    "eval-fim": _cmd_eval_fim,
    "eval-coherence": _cmd_eval_coherence,
    "serve": _cmd_serve,
    "stats": _cmd_stats,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (
        ConfigError,
        datagen.DatagenError,
        study.StudyError,
        OSError,
        ValueError,
    ) as exc:
        print(f"revise {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
