"""Command-line entry point.

    ctm <stage|run-all> --config pipeline.toml [--seed N] [--threads N] [--out DIR]
    ctm synth --out corpus.jsonl [--truth truth.json] [generator options]

Exit codes: 0 success, 1 runtime failure, 2 config/validation failure.
Log level comes from CTM_LOG (error, warn, info, debug; default warn).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .pipeline import STAGES, ConfigError, load_config, run_all, run_stage
from .synth import PlantedSpec, generate_planted, save_truth

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctm",
        description="Contextual topic modeling pipeline over a corpus of abstracts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in STAGES + ["run-all"]:
        p = sub.add_parser(name, help=f"run the '{name}' pipeline step")
        p.add_argument("--config", required=True, help="TOML pipeline config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
        p.add_argument("--out", default=None, help="override the config out_dir")

    p = sub.add_parser("synth", help="generate a planted-topic synthetic corpus")
    p.add_argument("--out", required=True, help="corpus JSONL output path")
    p.add_argument("--truth", default=None, help="optional truth JSON output path")
    p.add_argument("--n-topics", type=int, default=8)
    p.add_argument("--n-docs", type=int, default=200)
    p.add_argument("--doc-length", type=int, default=60)
    p.add_argument("--vocab-per-topic", type=int, default=40)
    p.add_argument("--overlap", type=float, default=0.2)
    p.add_argument("--concentration", type=float, default=0.1)
    p.add_argument("--year-min", type=int, default=2004)
    p.add_argument("--year-max", type=int, default=2021)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _run_synth(args) -> int:
    from .corpus import save_corpus

    spec = PlantedSpec(
        n_topics=args.n_topics,
        n_docs=args.n_docs,
        doc_length=args.doc_length,
        vocab_per_topic=args.vocab_per_topic,
        overlap_fraction=args.overlap,
        year_range=(args.year_min, args.year_max),
        mixing_concentration=args.concentration,
        seed=args.seed,
    )
    corpus, labels, theta, phi = generate_planted(spec)
    save_corpus(corpus, args.out)
    if args.truth:
        save_truth(args.truth, labels, theta, phi)
    print(f"wrote {len(corpus)} documents to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("CTM_LOG", "warn").lower()
    logging.basicConfig(level=_LOG_LEVELS.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")

    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return _run_synth(args)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads is not None:
            cfg.threads = args.threads
        if args.out is not None:
            cfg.out_dir = args.out
        if args.command == "run-all":
            run_all(cfg)
            print(f"pipeline complete; artifacts in {cfg.out_dir}")
        else:
            files = run_stage(args.command, cfg)
            print(f"stage '{args.command}' wrote {len(files)} files under {cfg.out_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
