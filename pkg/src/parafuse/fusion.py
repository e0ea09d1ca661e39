"""Weighted score fusion of a lexical and a dense ranking.

The fused score of an item is alpha * lexical + beta * dense over the union
of both lists' ids, a missing side counting 0, so an item only one retriever
found still surfaces. Weights come from a small grid swept on validation
queries; the case-retrieval default is (3, 1), candidate ranking uses (4, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .evaluation import Qrels, RunMap, prf_at_cutoff, recall_at_n
from .types import ScoredList

DEFAULT_GRID = ((1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0))


@dataclass(frozen=True)
class FusionWeights:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        for value in (self.alpha, self.beta):
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"weights must be finite and >= 0: {self}")
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("at least one weight must be positive")


def _minmax(scores: dict[str, float]) -> dict[str, float]:
    if not scores:
        return scores
    low, high = min(scores.values()), max(scores.values())
    if high == low:
        # a constant list carries no ordering signal; weight it fully
        return {item_id: 1.0 for item_id in scores}
    span = high - low
    return {item_id: (s - low) / span for item_id, s in scores.items()}


def fuse(lexical: ScoredList, dense: ScoredList, weights: FusionWeights,
         normalize: bool = False) -> ScoredList:
    """Combine two rankings for the same query into one.

    With ``normalize`` each side is min-max scaled to [0, 1] first (a
    constant list maps to all ones). Ties in the fused score rank by
    ascending item id like everywhere else.
    """
    if lexical.query_id != dense.query_id:
        raise ValueError(
            f"query mismatch: {lexical.query_id!r} vs {dense.query_id!r}"
        )
    lex_scores = lexical.to_dict()
    dense_scores = dense.to_dict()
    if normalize:
        lex_scores = _minmax(lex_scores)
        dense_scores = _minmax(dense_scores)
    entries = [
        (
            item_id,
            weights.alpha * lex_scores.get(item_id, 0.0)
            + weights.beta * dense_scores.get(item_id, 0.0),
        )
        for item_id in set(lex_scores) | set(dense_scores)
    ]
    return ScoredList(lexical.query_id, entries)


def _metric_fn(metric: str):
    name, _, depth_text = metric.partition("@")
    if not depth_text.isdigit() or int(depth_text) < 1:
        raise ValueError(f"bad sweep metric: {metric!r}")
    depth = int(depth_text)
    if name == "recall":
        return lambda run, qrels: recall_at_n(run, qrels, depth)
    if name == "f1":
        return lambda run, qrels: prf_at_cutoff(run, qrels, depth)[2]
    raise ValueError(f"bad sweep metric: {metric!r}")


def sweep_weights(
    lexical_runs: RunMap,
    dense_runs: RunMap,
    qrels: Qrels,
    grid=DEFAULT_GRID,
    metric: str = "recall@500",
    normalize: bool = False,
) -> tuple[FusionWeights, list[tuple[float, float, float]]]:
    """Evaluate every weight pair on the grid; first best-scoring pair wins.

    Returns the winning weights and (alpha, beta, macro metric) rows in grid
    order. ``metric`` is ``recall@N`` or ``f1@k``.
    """
    if not qrels:
        raise ValueError("empty qrels")
    pairs = [FusionWeights(float(a), float(b)) for a, b in grid]
    if not pairs:
        raise ValueError("empty weight grid")
    measure = _metric_fn(metric)
    rows = []
    best, best_value = None, -1.0
    for weights in pairs:
        total = 0.0
        for query_id in sorted(qrels):
            lex = lexical_runs.get(query_id) or ScoredList(query_id, [])
            den = dense_runs.get(query_id) or ScoredList(query_id, [])
            total += measure(fuse(lex, den, weights, normalize), qrels)
        value = total / len(qrels)
        rows.append((weights.alpha, weights.beta, value))
        if value > best_value:
            best, best_value = weights, value
    return best, rows


def overlap_report(run_a: ScoredList, run_b: ScoredList, qrels: Qrels,
                   depth: int) -> dict[str, float]:
    """How much of each run's relevant-found-in-top-depth the other shares.

    Low shared fractions are the case for fusing: the runs surface different
    relevant items. 0/0 counts as 0.0.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if run_a.query_id != run_b.query_id:
        raise ValueError(
            f"query mismatch: {run_a.query_id!r} vs {run_b.query_id!r}"
        )
    relevant = qrels.get(run_a.query_id)
    if not relevant:
        raise ValueError(f"query {run_a.query_id!r} not in qrels")
    found_a = {i for i, _ in run_a.entries[:depth] if i in relevant}
    found_b = {i for i, _ in run_b.entries[:depth] if i in relevant}
    shared = found_a & found_b
    return {
        "relevant_found_a": float(len(found_a)),
        "relevant_found_b": float(len(found_b)),
        "shared_fraction_a": len(shared) / len(found_a) if found_a else 0.0,
        "shared_fraction_b": len(shared) / len(found_b) if found_b else 0.0,
    }
