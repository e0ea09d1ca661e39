"""Per-pool candidate ranking for the entailment task."""

import numpy as np
import pytest

from parafuse.corpus import load_task2_corpus
from parafuse.dense import EmbeddingMatrix, HashingEmbedder
from parafuse.entailment import (
    DEFAULT_TASK2_WEIGHTS,
    EntailmentQuery,
    rank_candidates,
    select_entailing,
)
from parafuse.fusion import FusionWeights, fuse


def make_query(**kwargs):
    base = dict(
        query_id="q1",
        query_text="the tribunal erred in law",
        candidates=[
            ("c1", "the tribunal erred in law by ignoring the affidavit"),
            ("c2", "costs follow every event under ordinary circumstances"),
            ("c3", "the panel misapprehended the testimony entirely"),
        ],
    )
    base.update(kwargs)
    return EntailmentQuery(**base)


class TestQueryValidation:
    def test_empty_id(self):
        with pytest.raises(ValueError):
            make_query(query_id="")

    def test_blank_text(self):
        with pytest.raises(ValueError, match="empty query text"):
            make_query(query_text="   ")

    def test_no_candidates(self):
        with pytest.raises(ValueError, match="no candidates"):
            make_query(candidates=[])

    def test_duplicate_candidate_ids(self):
        with pytest.raises(ValueError, match="duplicate"):
            make_query(candidates=[("c1", "a"), ("c1", "b")])

    def test_labels_must_cite_known_candidates(self):
        with pytest.raises(ValueError, match="unknown candidates"):
            make_query(relevant_ids={"c9"})

    def test_embedding_ids(self):
        q = make_query()
        assert q.embedding_id() == "q1#query"
        assert q.embedding_id("c2") == "q1#c2"


def test_lexical_keeps_whole_pool():
    # c2 shares no terms with the query but still appears, at zero
    ranking = rank_candidates(make_query(), method="lexical")
    assert len(ranking) == 3
    assert ranking.ids()[0] == "c1"
    assert ranking.score_of("c2") == 0.0


def test_pool_isolation():
    """The same candidate text scores differently in different pools."""
    shared = ("c1", "alpha beta gamma")
    narrow = EntailmentQuery("qa", "alpha", [shared, ("c2", "delta epsilon")])
    crowded = EntailmentQuery(
        "qb", "alpha",
        [shared, ("c2", "alpha zeta eta"), ("c3", "alpha theta iota")],
    )
    score_narrow = rank_candidates(narrow, method="lexical").score_of("c1")
    score_crowded = rank_candidates(crowded, method="lexical").score_of("c1")
    # "alpha" is rare in one pool, ubiquitous in the other
    assert score_narrow > 0
    assert score_narrow != score_crowded


def test_dense_default_embedder_deterministic():
    q = make_query()
    first = rank_candidates(q, method="dense")
    second = rank_candidates(q, method="dense")
    assert first.entries == second.entries
    assert len(first) == 3


def test_dense_accepts_custom_embedder():
    q = make_query()
    small = rank_candidates(q, method="dense", embedder=HashingEmbedder(dim=16))
    default = rank_candidates(q, method="dense")
    assert len(small) == 3
    assert small.entries != default.entries


def test_dense_shared_matrix_lookup():
    q = make_query()
    dim = 8
    vecs = np.zeros((4, dim), dtype=np.float32)
    vecs[0, 0] = 1.0              # q1#query
    vecs[1, 0] = 0.5              # q1#c1
    vecs[2, 0] = 0.9              # q1#c2
    vecs[3, 1] = 1.0              # q1#c3, orthogonal
    matrix = EmbeddingMatrix(
        ["q1#query", "q1#c1", "q1#c2", "q1#c3"], vecs
    )
    ranking = rank_candidates(q, method="dense", embeddings=matrix)
    assert ranking.ids() == ["c2", "c1", "c3"]
    assert ranking.score_of("c3") == 0.0


def test_dense_shared_matrix_missing_id():
    q = make_query()
    matrix = EmbeddingMatrix(
        ["q1#query", "q1#c1"], np.ones((2, 8), dtype=np.float32)
    )
    with pytest.raises(ValueError, match="q1#c2"):
        rank_candidates(q, method="dense", embeddings=matrix)


def test_fused_is_fuse_of_components():
    q = make_query()
    assert DEFAULT_TASK2_WEIGHTS == FusionWeights(4.0, 1.0)
    fused = rank_candidates(q, method="fused")
    lex = rank_candidates(q, method="lexical")
    den = rank_candidates(q, method="dense")
    assert fused.entries == fuse(lex, den, DEFAULT_TASK2_WEIGHTS).entries


def test_fused_respects_weights():
    q = make_query()
    lex_only = rank_candidates(q, method="fused",
                               weights=FusionWeights(1.0, 0.0))
    lex = rank_candidates(q, method="lexical")
    assert lex_only.ids() == lex.ids()


def test_unknown_method():
    with pytest.raises(ValueError, match="unknown entailment method"):
        rank_candidates(make_query(), method="bm25")


def test_select_entailing():
    q = make_query()
    ranking = rank_candidates(q, method="lexical")
    assert select_entailing(ranking) == {"c1"}
    assert select_entailing(ranking, k=3) == {"c1", "c2", "c3"}
    assert select_entailing(ranking, k=10) == {"c1", "c2", "c3"}
    with pytest.raises(ValueError):
        select_entailing(ranking, k=0)


def test_bundled_fixture_top_one_is_labeled(task2_dir):
    queries = load_task2_corpus(task2_dir)
    assert len(queries) == 3
    for query in queries:
        for method in ("lexical", "dense", "fused"):
            ranking = rank_candidates(query, method=method)
            assert select_entailing(ranking, k=1) == query.relevant_ids, (
                f"{query.query_id} via {method}"
            )
