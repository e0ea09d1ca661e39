"""Candidate-paragraph ranking for the entailment task.

Each query is one decision fragment plus its own small pool of candidate
paragraphs; the task is to pick the candidate(s) the fragment entails.
Ranking reuses the retrieval machinery, but statistics never leak across
queries: every candidate pool gets its own index, built from that pool alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import EmbeddingMatrix, HashingEmbedder
from .fusion import FusionWeights, fuse
from .lexical import build_index, score_all
from .types import ScoredList

METHODS = ("lexical", "dense", "fused")

DEFAULT_TASK2_WEIGHTS = FusionWeights(4.0, 1.0)


@dataclass
class EntailmentQuery:
    """One fragment with its candidate pool and (for labeled data) answers."""

    query_id: str
    query_text: str
    candidates: list[tuple[str, str]]
    relevant_ids: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if not self.query_id:
            raise ValueError("empty query id")
        if not self.query_text.strip():
            raise ValueError(f"query {self.query_id}: empty query text")
        if not self.candidates:
            raise ValueError(f"query {self.query_id}: no candidates")
        ids = [cid for cid, _ in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValueError(f"query {self.query_id}: duplicate candidate ids")
        unknown = self.relevant_ids - set(ids)
        if unknown:
            raise ValueError(
                f"query {self.query_id}: labels cite unknown candidates "
                f"{sorted(unknown)}"
            )

    def embedding_id(self, candidate_id: str | None = None) -> str:
        """Namespaced id used in shared embedding files.

        The fragment itself is ``<query_id>#query``; candidates are
        ``<query_id>#<candidate_id>``.
        """
        suffix = "query" if candidate_id is None else candidate_id
        return f"{self.query_id}#{suffix}"


def _lexical_ranking(query: EntailmentQuery, k1: float, b: float) -> ScoredList:
    index = build_index(query.candidates, granularity="paragraph", k1=k1, b=b)
    scores = score_all(index, query.query_text)
    # full pool, zeros included: the cutoff selection happens downstream
    entries = [
        (index.item_ids[o], float(scores[o])) for o in range(index.n_items)
    ]
    return ScoredList(query.query_id, entries)


def _dense_ranking(query: EntailmentQuery, embedder,
                   embeddings: EmbeddingMatrix | None) -> ScoredList:
    if embeddings is not None:
        query_vec = embeddings.vector_of(query.embedding_id())
        cand_vecs = [
            embeddings.vector_of(query.embedding_id(cid))
            for cid, _ in query.candidates
        ]
    else:
        embedder = embedder or HashingEmbedder()
        query_vec = embedder.embed(query.query_text)
        cand_vecs = [embedder.embed(text) for _, text in query.candidates]
    matrix = np.stack(cand_vecs).astype(np.float32)
    scores = (matrix @ query_vec.astype(np.float32)).astype(np.float64)
    entries = [
        (cid, float(scores[i])) for i, (cid, _) in enumerate(query.candidates)
    ]
    return ScoredList(query.query_id, entries)


def rank_candidates(
    query: EntailmentQuery,
    method: str = "fused",
    weights: FusionWeights = DEFAULT_TASK2_WEIGHTS,
    k1: float = 1.2,
    b: float = 0.75,
    embedder=None,
    embeddings: EmbeddingMatrix | None = None,
) -> ScoredList:
    """Rank the query's candidate pool. Every candidate appears exactly once.

    ``embeddings`` is an optional shared matrix keyed by namespaced ids (see
    EntailmentQuery.embedding_id); without one, ``embedder`` (default: the
    reference hashing embedder) encodes texts on the fly.
    """
    if method == "lexical":
        return _lexical_ranking(query, k1, b)
    if method == "dense":
        return _dense_ranking(query, embedder, embeddings)
    if method == "fused":
        return fuse(
            _lexical_ranking(query, k1, b),
            _dense_ranking(query, embedder, embeddings),
            weights,
        )
    raise ValueError(f"unknown entailment method: {method!r}")


def select_entailing(ranking: ScoredList, k: int = 1) -> set[str]:
    """The top-k candidate ids, the final yes/no decision for the task."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return set(ranking.ids()[:k])
