"""Command line entry point, one verb per artifact kind."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .ops import export_embeddings, score_pairs, summarize_cases


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parafuse-adapters",
        description="Produce embeddings, summaries, and pair scores from a normalized corpus.",
    )
    parser.add_argument(
        "--version", action="version", version=f"parafuse-adapters {__version__}"
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    embed = verbs.add_parser("embed-export", help="embed corpus segments")
    embed.add_argument("--corpus", required=True)
    embed.add_argument("--model", default="hash:256")
    embed.add_argument("--out", required=True)
    embed.add_argument("--granularity", default="paragraph", choices=["paragraph", "document"])

    summ = verbs.add_parser("summarize", help="write one summary per case")
    summ.add_argument("--corpus", required=True)
    summ.add_argument("--model", default="lead")
    summ.add_argument("--out", required=True)
    summ.add_argument("--ratio", type=float, default=0.10)

    pairs = verbs.add_parser("score-pairs", help="score requested query/candidate pairs")
    pairs.add_argument("--queries", required=True, help="query summary file")
    pairs.add_argument("--candidates", required=True, help="candidate summary file")
    pairs.add_argument("--pairs", required=True, help="two-column pair request TSV")
    pairs.add_argument("--model", default="overlap")
    pairs.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "embed-export":
            out = export_embeddings(args.corpus, args.model, args.out, args.granularity)
        elif args.verb == "summarize":
            out = summarize_cases(args.corpus, args.model, args.out, args.ratio)
        else:
            out = score_pairs(args.queries, args.candidates, args.pairs, args.model, args.out)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
