"""CLI: ctm-embed --corpus corpus.jsonl --model <id> --pooling mean --out embeddings.ctme"""

from __future__ import annotations

import argparse
import logging
import sys

from .sidecar import SidecarConfig, SidecarError, embed_corpus


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ctm-embed",
        description="Encode corpus abstracts with a pretrained transformer "
                    "into the CTME embedding format.",
    )
    parser.add_argument("--corpus", required=True, help="corpus.jsonl path")
    parser.add_argument("--model", default="sentence-transformers/all-MiniLM-L6-v2",
                        help="model identifier or local model directory")
    parser.add_argument("--pooling", choices=["mean", "cls"], default="mean")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--out", required=True, help="output .ctme path")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = SidecarConfig(corpus=args.corpus, model=args.model,
                               pooling=args.pooling, batch_size=args.batch_size,
                               out=args.out)
        path = embed_corpus(config)
    except (SidecarError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
