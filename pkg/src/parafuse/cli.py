"""Command-line entry point.

One verb per pipeline stage. Settings come from built-in defaults, then the
config file (--config or $PARAFUSE_CONFIG), then command-line overrides:
dedicated flags where they exist and the generic ``--set key=value``
(repeatable) for everything else.

Exit codes: 0 success, 2 for configuration or input-validation problems,
1 for unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, config as config_mod, pipeline


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file path")
    parser.add_argument("--out-dir", dest="out_dir", help="artifact directory")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parafuse",
        description="Two-stage legal case retrieval pipeline",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="segment, clean and split raw cases")
    _common(p)
    p.add_argument("--task1-dir", dest="task1_dir")
    p.add_argument("--labels-file", dest="labels_file")

    p = sub.add_parser("index", help="build the term index and embeddings")
    _common(p)
    p.add_argument("--granularity", choices=("document", "paragraph"))

    p = sub.add_parser("retrieve", help="rank corpus items per query")
    _common(p)
    p.add_argument("--method", choices=("lexical", "dense"), required=True)
    p.add_argument("--granularity", choices=("document", "paragraph"))
    p.add_argument("--split", choices=("train", "validation", "all"))

    p = sub.add_parser("aggregate", help="lift paragraph lists to case rankings")
    _common(p)
    p.add_argument("--method", choices=("lexical", "dense"), required=True)
    p.add_argument("--strategy",
                   choices=("positional", "scoresum", "interleave"))

    p = sub.add_parser("fuse", help="combine lexical and dense rankings")
    _common(p)
    p.add_argument("--lex", type=Path, help="lexical run file")
    p.add_argument("--dense", type=Path, help="dense run file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)

    p = sub.add_parser("evaluate", help="score a run file against qrels")
    _common(p)
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--qrels", type=Path)
    p.add_argument("--k", type=int, help="precision/recall/F1 cutoff")
    p.add_argument("--mode", choices=("macro", "pooled"))
    p.add_argument("--overlap-with", type=Path,
                   help="second run for relevant-overlap analysis")
    p.add_argument("--overlap-depth", type=int, default=500)

    p = sub.add_parser("sweep", help="grid-search weights or cutoff")
    _common(p)
    p.add_argument("kind", choices=("weights", "cutoff"))
    p.add_argument("--run", type=Path)
    p.add_argument("--lex", type=Path)
    p.add_argument("--dense", type=Path)
    p.add_argument("--qrels", type=Path)

    p = sub.add_parser("entail", help="rank entailment candidate pools")
    _common(p)
    p.add_argument("--method",
                   choices=("lexical", "dense", "fused", "all"),
                   default="all")

    p = sub.add_parser("rerank", help="reorder a run head by pair scores")
    _common(p)
    p.add_argument("--run", type=Path)
    p.add_argument("--pairs", type=Path, help="pair scores TSV")

    return parser


_FLAG_KEYS = {
    "out_dir": "out_dir",
    "task1_dir": "task1_dir",
    "labels_file": "labels_file",
    "granularity": "granularity",
    "split": "split",
    "strategy": "aggregation",
    "alpha": "alpha",
    "beta": "beta",
    "k": "cutoff_k",
    "mode": "eval_mode",
}


def _configure(args: argparse.Namespace) -> config_mod.PipelineConfig:
    cfg = config_mod.load_config(args.config)
    overrides: dict[str, str] = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = str(value)
    if getattr(args, "pairs", None) is not None:
        overrides["pair_scores_file"] = str(args.pairs)
    return config_mod.apply_overrides(cfg, overrides)


def _dispatch(args: argparse.Namespace) -> None:
    cfg = _configure(args)
    if args.command == "preprocess":
        pipeline.run_preprocess(cfg)
    elif args.command == "index":
        pipeline.run_index(cfg)
    elif args.command == "retrieve":
        pipeline.run_retrieve(cfg, args.method)
    elif args.command == "aggregate":
        pipeline.run_aggregate(cfg, args.method)
    elif args.command == "fuse":
        pipeline.run_fuse(cfg, args.lex, args.dense)
    elif args.command == "evaluate":
        pipeline.run_evaluate(cfg, args.run, args.qrels,
                              overlap_with=args.overlap_with,
                              overlap_depth=args.overlap_depth)
    elif args.command == "sweep":
        pipeline.run_sweep(cfg, args.kind, run_path=args.run,
                           lexical_path=args.lex, dense_path=args.dense,
                           qrels_path=args.qrels)
    elif args.command == "entail":
        methods = (("lexical", "dense", "fused") if args.method == "all"
                   else (args.method,))
        pipeline.run_entail(cfg, methods)
    elif args.command == "rerank":
        pipeline.run_rerank(cfg, args.run)
    else:  # unreachable: argparse enforces the choices
        raise ValueError(f"unknown command: {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _dispatch(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: report, don't crash
        print(f"failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
