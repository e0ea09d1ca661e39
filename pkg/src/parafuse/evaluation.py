"""Retrieval metrics and the run/qrels file formats.

Run files are standard six-column TREC text: ``qid Q0 docid rank score tag``
with ranks from 1 and scores printed to six decimals. Qrels are
``qid 0 docid 1``. Metrics: recall at fixed depths and precision / recall /
F1 at a cutoff k, macro-averaged over queries by default; pooled mode
counts hits and totals over all queries together before dividing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .types import ScoredList

Qrels = dict[str, set[str]]
RunMap = dict[str, ScoredList]

DEFAULT_RECALL_DEPTHS = (100, 200, 300, 500)


def _relevant_for(qrels: Qrels, query_id: str) -> set[str]:
    try:
        relevant = qrels[query_id]
    except KeyError:
        raise ValueError(f"query {query_id!r} not in qrels") from None
    if not relevant:
        raise ValueError(f"query {query_id!r} has an empty relevant set")
    return relevant


def recall_at_n(run: ScoredList, qrels: Qrels, n: int) -> float:
    """Fraction of the query's relevant items found in the top n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    relevant = _relevant_for(qrels, run.query_id)
    hits = sum(1 for item_id, _ in run.entries[:n] if item_id in relevant)
    return hits / len(relevant)


def prf_at_cutoff(run: ScoredList, qrels: Qrels, k: int) -> tuple[float, float, float]:
    """(precision, recall, f1) over the top k. Empty run scores zeros."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    relevant = _relevant_for(qrels, run.query_id)
    retrieved = run.entries[:k]
    if not retrieved:
        return 0.0, 0.0, 0.0
    hits = sum(1 for item_id, _ in retrieved if item_id in relevant)
    precision = hits / len(retrieved)
    recall = hits / len(relevant)
    f1 = (2 * precision * recall / (precision + recall)) if hits else 0.0
    return precision, recall, f1


@dataclass
class EvalReport:
    """Per-query and averaged metrics for one run."""

    k: int
    mode: str
    per_query: dict[str, dict[str, float]]
    averaged: dict[str, float]
    recall_at: dict[int, float]


def evaluate_run(
    runs: RunMap,
    qrels: Qrels,
    k: int,
    recall_depths: tuple[int, ...] = DEFAULT_RECALL_DEPTHS,
    mode: str = "macro",
) -> EvalReport:
    """Score a run against qrels.

    Every qrels query counts; queries missing from the run contribute an
    empty ranking. ``macro`` averages per-query metrics; ``pooled`` sums
    hit/retrieved/relevant counts over all queries first.
    """
    if mode not in ("macro", "pooled"):
        raise ValueError(f"unknown averaging mode: {mode!r}")
    if not qrels:
        raise ValueError("empty qrels")
    depths = tuple(recall_depths)
    if any(d < 1 for d in depths):
        raise ValueError(f"recall depths must be >= 1: {depths}")

    per_query: dict[str, dict[str, float]] = {}
    pooled_hits = pooled_retrieved = pooled_relevant = 0
    pooled_recall_hits = {d: 0 for d in depths}
    for query_id in sorted(qrels):
        run = runs.get(query_id) or ScoredList(query_id, [])
        precision, recall, f1 = prf_at_cutoff(run, qrels, k)
        row = {"precision": precision, "recall": recall, "f1": f1}
        relevant = qrels[query_id]
        for depth in depths:
            row[f"recall@{depth}"] = recall_at_n(run, qrels, depth)
            pooled_recall_hits[depth] += sum(
                1 for item_id, _ in run.entries[:depth] if item_id in relevant
            )
        per_query[query_id] = row
        pooled_hits += sum(1 for i, _ in run.entries[:k] if i in relevant)
        pooled_retrieved += min(k, len(run))
        pooled_relevant += len(relevant)

    if mode == "macro":
        n_queries = len(per_query)
        averaged = {
            "precision": sum(r["precision"] for r in per_query.values()) / n_queries,
            "recall": sum(r["recall"] for r in per_query.values()) / n_queries,
        }
        averaged["f1"] = sum(r["f1"] for r in per_query.values()) / n_queries
        recall_at = {
            d: sum(r[f"recall@{d}"] for r in per_query.values()) / n_queries
            for d in depths
        }
    else:
        precision = pooled_hits / pooled_retrieved if pooled_retrieved else 0.0
        recall = pooled_hits / pooled_relevant
        f1 = (2 * precision * recall / (precision + recall)) if pooled_hits else 0.0
        averaged = {"precision": precision, "recall": recall, "f1": f1}
        recall_at = {d: pooled_recall_hits[d] / pooled_relevant for d in depths}
    return EvalReport(k=k, mode=mode, per_query=per_query,
                      averaged=averaged, recall_at=recall_at)


def sweep_cutoff(
    runs: RunMap, qrels: Qrels, k_values
) -> tuple[int, list[tuple[int, float]]]:
    """Macro-F1 at each cutoff; best k wins ties by being smallest."""
    ks = sorted(set(int(k) for k in k_values))
    if not ks:
        raise ValueError("no cutoff values to sweep")
    curve = []
    best_k, best_f1 = None, -1.0
    for k in ks:
        report = evaluate_run(runs, qrels, k=k, recall_depths=(), mode="macro")
        f1 = report.averaged["f1"]
        curve.append((k, f1))
        if f1 > best_f1:
            best_k, best_f1 = k, f1
    return best_k, curve


def write_run(runs: RunMap, path: str | Path, tag: str = "parafuse") -> None:
    """Write a run file; queries sorted by id, entries in list order."""
    if not tag or any(ch.isspace() for ch in tag):
        raise ValueError(f"bad run tag: {tag!r}")
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in sorted(runs):
            for rank, (item_id, score) in enumerate(runs[query_id].entries, 1):
                fh.write(f"{query_id} Q0 {item_id} {rank} {score:.6f} {tag}\n")


def read_run(path: str | Path) -> RunMap:
    """Parse a run file back into ScoredLists.

    Validates the six-column shape, rank sequence and non-increasing scores
    per query; errors carry the line number.
    """
    per_query: dict[str, list[tuple[str, float]]] = {}
    last_rank: dict[str, int] = {}
    last_score: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 6:
                raise ValueError(
                    f"{path}:{lineno}: expected 6 fields, got {len(fields)}"
                )
            query_id, _, item_id, rank_text, score_text, _ = fields
            try:
                rank = int(rank_text)
                score = float(score_text)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: bad rank or score"
                ) from None
            expected = last_rank.get(query_id, 0) + 1
            if rank != expected:
                raise ValueError(
                    f"{path}:{lineno}: rank {rank} for {query_id!r}, "
                    f"expected {expected}"
                )
            if query_id in last_score and score > last_score[query_id]:
                raise ValueError(
                    f"{path}:{lineno}: score increases within query "
                    f"{query_id!r}"
                )
            last_rank[query_id] = rank
            last_score[query_id] = score
            per_query.setdefault(query_id, []).append((item_id, score))
    return {qid: ScoredList(qid, entries) for qid, entries in per_query.items()}


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in sorted(qrels):
            for item_id in sorted(qrels[query_id]):
                fh.write(f"{query_id} 0 {item_id} 1\n")


def read_qrels(path: str | Path) -> Qrels:
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 4 or fields[1] != "0" or fields[3] != "1":
                raise ValueError(f"{path}:{lineno}: malformed qrels line")
            qrels.setdefault(fields[0], set()).add(fields[2])
    if not qrels:
        raise ValueError(f"{path}: empty qrels")
    return qrels


def write_report(report: EvalReport, tsv_path: str | Path,
                 json_path: str | Path | None = None) -> None:
    """Per-query TSV plus an optional JSON dump of the whole report."""
    depths = sorted(report.recall_at)
    header = ["query_id", "precision", "recall", "f1"]
    header += [f"recall@{d}" for d in depths]
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for query_id in sorted(report.per_query):
            row = report.per_query[query_id]
            cells = [query_id] + [
                f"{row[name]:.6f}" for name in header[1:]
            ]
            fh.write("\t".join(cells) + "\n")
        cells = [f"ALL[{report.mode}]"]
        cells += [f"{report.averaged[n]:.6f}" for n in ("precision", "recall", "f1")]
        cells += [f"{report.recall_at[d]:.6f}" for d in depths]
        fh.write("\t".join(cells) + "\n")
    if json_path is not None:
        payload = {
            "k": report.k,
            "mode": report.mode,
            "averaged": report.averaged,
            "recall_at": {str(d): v for d, v in report.recall_at.items()},
            "per_query": report.per_query,
        }
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")
