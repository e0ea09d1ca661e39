"""Cross-package checks: every artifact loads through the engine's readers."""

import os

import numpy as np
import pytest
from parafuse.corpus import Case, write_corpus_jsonl
from parafuse.dense import dense_topn, load_embeddings
from parafuse.evaluation import read_run, write_run
from parafuse.pipeline import read_pair_scores, rerank_with_pairs
from parafuse.types import ScoredList

from parafuse_adapters.corpus_io import read_corpus
from parafuse_adapters.models import HashEncoder, resolve_encoder
from parafuse_adapters.ops import export_embeddings, score_pairs, summarize_cases
from parafuse_adapters.outputs import manifest_path_for, read_summaries

CHECKPOINT_ENV = "PARAFUSE_ADAPTERS_ENCODER_CHECKPOINT"


def test_embeddings_load_bit_exact(mixed_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, "hash:32:3", out)
    matrix = load_embeddings(out)
    cases = read_corpus(mixed_corpus)
    ids = [sid for case in cases for sid, _ in case.segments()]
    texts = [t for case in cases for _, t in case.segments()]
    assert list(matrix.ids) == ids
    assert matrix.vectors.dtype == np.float32
    assert np.array_equal(matrix.vectors, HashEncoder(32, 3).encode(texts))


def test_exported_vectors_drive_dense_retrieval(mixed_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, "hash:256", out)
    matrix = load_embeddings(out)
    query = matrix.vector_of("q1#paragraph#0")
    ranked = dense_topn(matrix, query, 3)
    # a vector is its own nearest neighbour under dot product at unit norm
    assert ranked.ids()[0] == "q1#paragraph#0"
    assert all(np.isfinite(s) for _, s in ranked.entries)


def test_summaries_respect_the_cap_end_to_end(tmp_path):
    paragraphs = [
        " ".join(f"s{i:02d}w{j}" for j in range(12)) + "."
        for i in range(30)
    ]
    corpus = tmp_path / "corpus.jsonl"
    write_corpus_jsonl([Case("c1", None, None, paragraphs)], corpus)
    out = tmp_path / "sums.jsonl"
    summarize_cases(corpus, "lead", out, ratio=0.10)
    record = read_summaries(out)["c1"]
    source_words = sum(len(p.split()) for p in paragraphs)
    assert 0 < len(record.summary_text.split()) <= int(source_words * 0.10)


def test_pair_scores_feed_rerank_with_zero_missing(tmp_path):
    cases = [
        Case("query", None, None, ["the carrier lost the grain cargo at sea"]),
        Case("close", None, None, ["the carrier lost refrigerated cargo at sea"]),
        Case("mid", None, None, ["a cargo dispute about demurrage charges"]),
        Case("far", None, None, ["municipal zoning appeal over fence height"]),
    ]
    corpus = tmp_path / "corpus.jsonl"
    write_corpus_jsonl(cases, corpus)
    sums = tmp_path / "sums.jsonl"
    summarize_cases(corpus, "lead", sums, ratio=1.0)

    # retrieval head to rerank, deliberately in the wrong order
    run = ScoredList("query", [("far", 3.0), ("mid", 2.0), ("close", 1.0)])
    run_path = tmp_path / "fused.trec"
    write_run({"query": run}, run_path)

    pairs = tmp_path / "pairs.tsv"
    pairs.write_text("query\tfar\nquery\tmid\nquery\tclose\n")
    scores_path = tmp_path / "scores.tsv"
    score_pairs(sums, sums, pairs, "overlap", scores_path)

    pair_scores = read_pair_scores(scores_path)
    assert set(pair_scores) == {("query", "far"), ("query", "mid"), ("query", "close")}

    loaded = read_run(run_path)["query"]
    reranked = rerank_with_pairs(loaded, pair_scores, depth=3)
    assert reranked.ids() == ["close", "mid", "far"]


def test_every_artifact_gets_a_manifest(mixed_corpus, tmp_path):
    emb = tmp_path / "emb.bin"
    sums = tmp_path / "sums.jsonl"
    scores = tmp_path / "scores.tsv"
    export_embeddings(mixed_corpus, "hash:16", emb)
    summarize_cases(mixed_corpus, "lead", sums)
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text("q1\td1\n")
    score_pairs(sums, sums, pairs, "overlap", scores)
    for artifact in (emb, sums, scores):
        assert manifest_path_for(artifact).exists(), artifact


@pytest.mark.skipif(
    CHECKPOINT_ENV not in os.environ,
    reason=f"needs a local transformer encoder checkpoint directory in ${CHECKPOINT_ENV}",
)
def test_checkpoint_encoder_runs_deterministically(mixed_corpus, tmp_path):
    ref = "hf:" + os.environ[CHECKPOINT_ENV]
    encoder = resolve_encoder(ref)
    texts = ["the cargo was damaged in transit", "the appeal was allowed"]
    assert np.array_equal(encoder.encode(texts), encoder.encode(texts))
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, ref, out)
    matrix = load_embeddings(out)
    assert matrix.vectors.shape[0] == 7
