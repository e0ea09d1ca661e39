"""Pipeline stages behind the command-line verbs.

Every stage reads and writes files under ``config.out_dir`` so stages can be
re-run independently; all outputs are deterministic (sorted iteration, fixed
run tags, no timestamps), which makes repeated runs byte-identical.

Artifacts: ``corpus.jsonl``, ``split.json``, ``qrels_*.txt``,
``index_<granularity>.pfix``, ``embeddings_<granularity>.pfemb``,
``runs/*.trec``, ``reports/*``, ``sweeps/*``, ``predictions/*``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from . import aggregation, corpus as corpus_mod, dense, evaluation, lexical
from .config import (
    PipelineConfig,
    parse_int_list,
    parse_int_range,
    parse_weight_grid,
)
from .entailment import METHODS, rank_candidates, select_entailing
from .fusion import FusionWeights, fuse, overlap_report, sweep_weights
from .types import ScoredList


def _out(config: PipelineConfig, *parts: str) -> Path:
    path = Path(config.out_dir).joinpath(*parts)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _require(path: Path, hint: str) -> Path:
    if not path.is_file():
        raise ValueError(f"missing {path} ({hint})")
    return path


def run_preprocess(config: PipelineConfig) -> list[Path]:
    """Ingest raw cases: segment, strip French, dedup boilerplate, split."""
    if not config.task1_dir or not config.labels_file:
        raise ValueError("preprocess needs task1_dir and labels_file")
    raw_corpus, split = corpus_mod.load_task1_corpus(
        config.task1_dir, config.labels_file, config.validation_count
    )
    stripped = [
        corpus_mod.strip_french(case, config.french_margin) for case in raw_corpus
    ]
    deduped = corpus_mod.dedup_boilerplate(stripped, config.dedup_threshold)

    rows = []
    for before, mid, after in zip(raw_corpus, stripped, deduped):
        flags = []
        if not before.is_empty() and mid.is_empty():
            flags.append("all_french")
        if after.is_empty():
            flags.append("empty")
        if (mid.intro, mid.summary) != (after.intro, after.summary):
            flags.append("boilerplate_removed")
        rows.append(
            {
                "case_id": after.case_id,
                "n_paragraphs": len(after.paragraphs),
                "words": sum(len(t.split()) for t in after.segment_texts()),
                "flags": flags,
            }
        )

    outputs = []
    corpus_path = _out(config, "corpus.jsonl")
    corpus_mod.write_corpus_jsonl(deduped, corpus_path)
    outputs.append(corpus_path)

    report_path = _out(config, "ingest_report.tsv")
    corpus_mod.write_ingest_report(rows, report_path)
    outputs.append(report_path)

    split_path = _out(config, "split.json")
    with open(split_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "train": split.train_query_ids,
                "validation": split.validation_query_ids,
            },
            fh,
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    outputs.append(split_path)

    for name, qids in (("train", split.train_query_ids),
                       ("validation", split.validation_query_ids)):
        qrels_path = _out(config, f"qrels_{name}.txt")
        evaluation.write_qrels(
            {qid: split.qrels[qid] for qid in qids}, qrels_path
        )
        outputs.append(qrels_path)

    stats_path = _out(config, "stats.json")
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "pre_dedup": corpus_mod.corpus_stats(stripped),
                "post_dedup": corpus_mod.corpus_stats(deduped),
                "queries": {
                    "train": len(split.train_query_ids),
                    "validation": len(split.validation_query_ids),
                },
            },
            fh,
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    outputs.append(stats_path)

    stats = corpus_mod.corpus_stats(deduped)
    print(f"cases: {stats['cases']} ({stats['empty_cases']} empty after cleaning)")
    print(f"queries: {len(split.train_query_ids)} train, "
          f"{len(split.validation_query_ids)} validation")
    return outputs


def run_index(config: PipelineConfig) -> list[Path]:
    """Build the inverted index and, unless external, the embedding matrix."""
    corpus_path = _require(_out(config, "corpus.jsonl"), "run preprocess first")
    cases = corpus_mod.read_corpus_jsonl(corpus_path)
    items = corpus_mod.index_items(cases, config.granularity)
    index = lexical.build_index(items, config.granularity, config.k1, config.b)
    index_path = _out(config, f"index_{config.granularity}.pfix")
    lexical.save_index(index, index_path)
    outputs = [index_path]
    print(f"indexed {index.n_items} {config.granularity} items, "
          f"{len(index.postings)} terms")

    if config.embeddings_file:
        print(f"embeddings: external file {config.embeddings_file}")
    else:
        limit = (config.document_token_limit
                 if config.granularity == "document" else None)
        embedder = dense.HashingEmbedder(
            config.embedding_dim, config.embedding_seed, max_tokens=limit
        )
        matrix = dense.embed_items(items, embedder)
        emb_path = _out(config, f"embeddings_{config.granularity}.pfemb")
        dense.save_embeddings(matrix, emb_path)
        outputs.append(emb_path)
        print(f"embedded {len(matrix)} items at dim {matrix.dim}")
    return outputs


def _query_ids(config: PipelineConfig) -> list[str]:
    split_path = _require(_out(config, "split.json"), "run preprocess first")
    with open(split_path, encoding="utf-8") as fh:
        split = json.load(fh)
    if config.split == "validation":
        return split["validation"]
    if config.split == "train":
        return split["train"]
    if config.split == "all":
        return split["train"] + split["validation"]
    raise ValueError(f"unknown split: {config.split!r}")


def _load_matrix(config: PipelineConfig) -> dense.EmbeddingMatrix:
    if config.embeddings_file:
        return dense.load_embeddings(
            _require(Path(config.embeddings_file), "external embeddings_file")
        )
    return dense.load_embeddings(
        _require(
            _out(config, f"embeddings_{config.granularity}.pfemb"),
            "run index first",
        )
    )


def run_retrieve(config: PipelineConfig, method: str) -> list[Path]:
    """Rank corpus items for each query with one retriever.

    Paragraph granularity queries every segment of each query case and
    writes the per-paragraph part lists (aggregation is a separate stage);
    document granularity ranks whole cases directly, excluding the query
    case from its own ranking.
    """
    if method not in ("lexical", "dense"):
        raise ValueError(f"unknown retrieval method: {method!r}")
    corpus_path = _require(_out(config, "corpus.jsonl"), "run preprocess first")
    cases = corpus_mod.read_corpus_jsonl(corpus_path)
    by_id = {case.case_id: case for case in cases}
    query_ids = _query_ids(config)
    missing = sorted(set(query_ids) - set(by_id))
    if missing:
        raise ValueError(f"queries not in corpus: {missing[:10]}")

    if method == "lexical":
        index = lexical.load_index(
            _require(_out(config, f"index_{config.granularity}.pfix"),
                     "run index first")
        )
        if index.granularity != config.granularity:
            raise ValueError(
                f"index granularity {index.granularity!r} does not match "
                f"config {config.granularity!r}"
            )
    else:
        matrix = _load_matrix(config)

    runs: dict[str, ScoredList] = {}
    if config.granularity == "paragraph":
        for query_id in query_ids:
            for ref, text in by_id[query_id].segments():
                part_id = ref.to_id()
                if method == "lexical":
                    runs[part_id] = lexical.query_topn(
                        index, text, config.paragraph_depth, query_id=part_id
                    )
                else:
                    runs[part_id] = dense.dense_topn(
                        matrix, matrix.vector_of(part_id),
                        config.paragraph_depth, query_id=part_id,
                    )
        run_path = _out(config, "runs", f"{method}_paragraph_parts.trec")
    else:
        depth = config.aggregated_depth
        for query_id in query_ids:
            if method == "lexical":
                ranked = lexical.query_topn(
                    index, by_id[query_id].document_text(), depth + 1,
                    query_id=query_id,
                )
            else:
                ranked = dense.dense_topn(
                    matrix, matrix.vector_of(query_id), depth + 1,
                    query_id=query_id,
                )
            runs[query_id] = ranked.without(query_id).top(depth)
        run_path = _out(config, "runs", f"{method}_document.trec")

    evaluation.write_run(runs, run_path, tag=config.run_tag)
    print(f"wrote {len(runs)} rankings to {run_path}")
    return [run_path]


def run_aggregate(config: PipelineConfig, method: str) -> list[Path]:
    """Lift paragraph part lists to case rankings."""
    parts_path = _require(
        _out(config, "runs", f"{method}_paragraph_parts.trec"),
        "run retrieve at paragraph granularity first",
    )
    parts = evaluation.read_run(parts_path)
    grouped: dict[str, list[ScoredList]] = {}
    for part_id in sorted(parts):
        grouped.setdefault(corpus_mod.case_id_of(part_id), []).append(
            parts[part_id]
        )
    runs = {}
    for query_id, lists in grouped.items():
        runset = aggregation.ParagraphRunSet(
            query_id=query_id,
            per_paragraph=list(enumerate(lists)),
            depth=config.paragraph_depth,
        )
        runs[query_id] = aggregation.aggregate(
            runset, config.aggregation
        ).top(config.aggregated_depth)
    run_path = _out(config, "runs", f"{method}_paragraph.trec")
    evaluation.write_run(runs, run_path, tag=config.run_tag)
    print(f"aggregated {len(parts)} part lists into {len(runs)} rankings "
          f"({config.aggregation})")
    return [run_path]


def run_fuse(config: PipelineConfig, lexical_path: Path | None = None,
             dense_path: Path | None = None) -> list[Path]:
    """Weighted-sum fusion of two run files over the union of their queries."""
    lex_path = lexical_path or _out(config, "runs", "lexical_paragraph.trec")
    den_path = dense_path or _out(config, "runs", "dense_paragraph.trec")
    lex_runs = evaluation.read_run(_require(Path(lex_path), "lexical run"))
    den_runs = evaluation.read_run(_require(Path(den_path), "dense run"))
    weights = FusionWeights(config.alpha, config.beta)
    runs = {}
    for query_id in sorted(set(lex_runs) | set(den_runs)):
        lex = lex_runs.get(query_id) or ScoredList(query_id, [])
        den = den_runs.get(query_id) or ScoredList(query_id, [])
        runs[query_id] = fuse(
            lex, den, weights, config.normalize_fusion
        ).top(config.aggregated_depth)
    run_path = _out(config, "runs", "fused.trec")
    evaluation.write_run(runs, run_path, tag=config.run_tag)
    print(f"fused {len(runs)} rankings at ({weights.alpha:g}, {weights.beta:g})")
    return [run_path]


def run_evaluate(config: PipelineConfig, run_path: Path,
                 qrels_path: Path | None = None,
                 overlap_with: Path | None = None,
                 overlap_depth: int = 500) -> list[Path]:
    """Score a run file; optionally add a relevant-overlap comparison."""
    run_path = _require(Path(run_path), "run file to evaluate")
    qrels_path = Path(qrels_path) if qrels_path else _out(
        config, "qrels_validation.txt"
    )
    runs = evaluation.read_run(run_path)
    qrels = evaluation.read_qrels(_require(qrels_path, "qrels file"))
    report = evaluation.evaluate_run(
        runs,
        qrels,
        k=config.cutoff_k,
        recall_depths=parse_int_list(config.recall_depths),
        mode=config.eval_mode,
    )
    stem = run_path.stem
    tsv_path = _out(config, "reports", f"{stem}.tsv")
    json_path = _out(config, "reports", f"{stem}.json")
    evaluation.write_report(report, tsv_path, json_path)
    outputs = [tsv_path, json_path]

    k = report.k
    avg = report.averaged
    print(f"{stem} [{report.mode}] P@{k}={avg['precision']:.4f} "
          f"R@{k}={avg['recall']:.4f} F1@{k}={avg['f1']:.4f}")
    for depth in sorted(report.recall_at):
        print(f"{stem} recall@{depth}={report.recall_at[depth]:.4f}")

    if overlap_with is not None:
        other_runs = evaluation.read_run(_require(Path(overlap_with),
                                                  "overlap run"))
        rows = []
        for query_id in sorted(qrels):
            run_a = runs.get(query_id) or ScoredList(query_id, [])
            run_b = other_runs.get(query_id) or ScoredList(query_id, [])
            rows.append((query_id,
                         overlap_report(run_a, run_b, qrels, overlap_depth)))
        overlap_path = _out(
            config, "reports", f"overlap_{stem}_{Path(overlap_with).stem}.tsv"
        )
        with open(overlap_path, "w", encoding="utf-8") as fh:
            fh.write("query_id\tfound_a\tfound_b\tshared_fraction_a"
                     "\tshared_fraction_b\n")
            for query_id, row in rows:
                fh.write(
                    f"{query_id}\t{row['relevant_found_a']:.0f}"
                    f"\t{row['relevant_found_b']:.0f}"
                    f"\t{row['shared_fraction_a']:.6f}"
                    f"\t{row['shared_fraction_b']:.6f}\n"
                )
            mean_a = sum(r["shared_fraction_a"] for _, r in rows) / len(rows)
            mean_b = sum(r["shared_fraction_b"] for _, r in rows) / len(rows)
            fh.write(f"ALL\t-\t-\t{mean_a:.6f}\t{mean_b:.6f}\n")
        outputs.append(overlap_path)
        print(f"overlap@{overlap_depth}: shared_a={mean_a:.4f} "
              f"shared_b={mean_b:.4f}")
    return outputs


def run_sweep(config: PipelineConfig, kind: str,
              run_path: Path | None = None,
              lexical_path: Path | None = None,
              dense_path: Path | None = None,
              qrels_path: Path | None = None) -> list[Path]:
    """Grid-search fusion weights, or trace F1 against the cutoff."""
    qrels = evaluation.read_qrels(
        _require(Path(qrels_path) if qrels_path
                 else _out(config, "qrels_validation.txt"), "qrels file")
    )
    if kind == "weights":
        lex_path = lexical_path or _out(config, "runs", "lexical_paragraph.trec")
        den_path = dense_path or _out(config, "runs", "dense_paragraph.trec")
        lex_runs = evaluation.read_run(_require(Path(lex_path), "lexical run"))
        den_runs = evaluation.read_run(_require(Path(den_path), "dense run"))
        best, rows = sweep_weights(
            lex_runs,
            den_runs,
            qrels,
            grid=parse_weight_grid(config.weight_grid),
            metric=config.sweep_metric,
            normalize=config.normalize_fusion,
        )
        sweep_path = _out(config, "sweeps", "weight_sweep.tsv")
        with open(sweep_path, "w", encoding="utf-8") as fh:
            fh.write(f"alpha\tbeta\t{config.sweep_metric}\n")
            for alpha, beta, value in rows:
                fh.write(f"{alpha:g}\t{beta:g}\t{value:.6f}\n")
        print(f"best weights: ({best.alpha:g}, {best.beta:g}) "
              f"by {config.sweep_metric}")
        return [sweep_path]
    if kind == "cutoff":
        path = run_path or _out(config, "runs", "fused.trec")
        runs = evaluation.read_run(_require(Path(path), "run file"))
        best_k, curve = evaluation.sweep_cutoff(
            runs, qrels, parse_int_range(config.cutoff_range)
        )
        sweep_path = _out(config, "sweeps", "cutoff_curve.tsv")
        with open(sweep_path, "w", encoding="utf-8") as fh:
            fh.write("k\tmacro_f1\n")
            for k, f1 in curve:
                fh.write(f"{k}\t{f1:.6f}\n")
        print(f"best cutoff: k={best_k}")
        return [sweep_path]
    raise ValueError(f"unknown sweep kind: {kind!r}")


def run_entail(config: PipelineConfig, methods: tuple[str, ...] = METHODS
               ) -> list[Path]:
    """Rank every entailment query's candidate pool with each method."""
    if not config.task2_dir:
        raise ValueError("entail needs task2_dir")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown entailment method: {method!r}")
    queries = corpus_mod.load_task2_corpus(config.task2_dir)
    weights = FusionWeights(config.task2_alpha, config.task2_beta)
    embeddings = None
    if config.task2_embeddings_file:
        embeddings = dense.load_embeddings(
            _require(Path(config.task2_embeddings_file),
                     "task2_embeddings_file")
        )
    embedder = dense.HashingEmbedder(config.embedding_dim,
                                     config.embedding_seed)

    labeled = {q.query_id: q.relevant_ids for q in queries if q.relevant_ids}
    outputs = []
    if labeled:
        qrels_path = _out(config, "qrels_task2.txt")
        evaluation.write_qrels(labeled, qrels_path)
        outputs.append(qrels_path)

    for method in methods:
        runs = {}
        for query in queries:
            runs[query.query_id] = rank_candidates(
                query,
                method,
                weights=weights,
                k1=config.k1,
                b=config.b,
                embedder=embedder,
                embeddings=embeddings,
            )
        run_path = _out(config, "runs", f"task2_{method}.trec")
        evaluation.write_run(runs, run_path, tag=config.run_tag)
        outputs.append(run_path)

        pred_path = _out(config, "predictions", f"task2_{method}.txt")
        with open(pred_path, "w", encoding="utf-8") as fh:
            for query in sorted(runs):
                chosen = select_entailing(runs[query], config.task2_cutoff)
                for candidate_id in sorted(chosen):
                    fh.write(f"{query} {candidate_id}\n")
        outputs.append(pred_path)

        if labeled:
            report = evaluation.evaluate_run(
                {qid: runs[qid] for qid in labeled},
                labeled,
                k=config.task2_cutoff,
                recall_depths=(),
                mode=config.eval_mode,
            )
            tsv_path = _out(config, "reports", f"task2_{method}.tsv")
            evaluation.write_report(report, tsv_path, None)
            outputs.append(tsv_path)
            avg = report.averaged
            print(f"task2 {method}: P@{report.k}={avg['precision']:.4f} "
                  f"R@{report.k}={avg['recall']:.4f} "
                  f"F1@{report.k}={avg['f1']:.4f}")
        else:
            print(f"task2 {method}: {len(runs)} rankings (unlabeled)")
    return outputs


def read_pair_scores(path: str | Path) -> dict[tuple[str, str], float]:
    """TSV of ``query_id  case_id  score`` with scores in [0, 1]."""
    scores: dict[tuple[str, str], float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 3 tab-separated fields"
                )
            query_id, item_id, score_text = fields
            try:
                score = float(score_text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad score") from None
            if not (math.isfinite(score) and 0.0 <= score <= 1.0):
                raise ValueError(f"{path}:{lineno}: score not in [0, 1]")
            key = (query_id, item_id)
            if key in scores:
                raise ValueError(f"{path}:{lineno}: duplicate pair {key}")
            scores[key] = score
    if not scores:
        raise ValueError(f"{path}: no pair scores")
    return scores


def rerank_with_pairs(run: ScoredList, pair_scores: dict[tuple[str, str], float],
                      depth: int) -> ScoredList:
    """Reorder the top ``depth`` of a ranking by externally scored pairs.

    Every head item needs a pair score (missing pairs are an error listing
    them); the tail keeps its order below the head. Output scores are
    synthetic descending ranks since pair scores and retrieval scores are
    not on one scale.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    head = run.entries[:depth]
    tail = run.entries[depth:]
    missing = [
        (run.query_id, item_id)
        for item_id, _ in head
        if (run.query_id, item_id) not in pair_scores
    ]
    if missing:
        raise ValueError(f"missing pair scores: {missing[:20]}")
    reordered = sorted(
        head,
        key=lambda e: (-pair_scores[(run.query_id, e[0])], e[0]),
    )
    final = [item_id for item_id, _ in reordered] + [i for i, _ in tail]
    size = len(final)
    return ScoredList(
        run.query_id,
        [(item_id, float(size - i)) for i, item_id in enumerate(final)],
    )


def run_rerank(config: PipelineConfig, run_path: Path | None = None
               ) -> list[Path]:
    """Apply pair scores to the fused run and emit final predictions."""
    if not config.pair_scores_file:
        raise ValueError("rerank needs pair_scores_file")
    pair_scores = read_pair_scores(
        _require(Path(config.pair_scores_file), "pair_scores_file")
    )
    path = run_path or _out(config, "runs", "fused.trec")
    runs = evaluation.read_run(_require(Path(path), "run file to rerank"))
    reranked = {
        query_id: rerank_with_pairs(runs[query_id], pair_scores,
                                    config.rerank_depth)
        for query_id in sorted(runs)
    }
    out_path = _out(config, "runs", "reranked.trec")
    evaluation.write_run(reranked, out_path, tag=config.run_tag)

    pred_path = _out(config, "predictions", "task1_reranked.txt")
    with open(pred_path, "w", encoding="utf-8") as fh:
        for query_id in sorted(reranked):
            for item_id in reranked[query_id].ids()[: config.cutoff_k]:
                fh.write(f"{query_id} {item_id}\n")
    print(f"reranked {len(reranked)} rankings at depth {config.rerank_depth}")
    return [out_path, pred_path]
