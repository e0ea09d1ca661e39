"""Embedding export: container layout, determinism, and edge rows."""

import hashlib
import json
import struct
import sys

import numpy as np
import pytest

from parafuse_adapters.corpus_io import read_corpus
from parafuse_adapters.models import HashEncoder, resolve_encoder
from parafuse_adapters.ops import export_embeddings
from parafuse_adapters.outputs import read_manifest


def parse_container(path):
    """Independent decode of the binary layout: magic, dim, count, rows, ids."""
    blob = open(path, "rb").read()
    assert blob[:6] == b"PFEMB1"
    dim, count = struct.unpack("<II", blob[6:14])
    body = blob[14 : 14 + 4 * dim * count]
    vectors = np.frombuffer(body, dtype="<f4").reshape(count, dim)
    ids = json.loads(blob[14 + 4 * dim * count :].decode("utf-8"))
    return ids, vectors


def test_one_row_per_paragraph(four_paragraph_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    export_embeddings(four_paragraph_corpus, "hash:64", out)
    ids, vectors = parse_container(out)
    assert ids == [f"c1#paragraph#{i}" for i in range(4)]
    assert vectors.shape == (4, 64)


def test_segment_order_matches_corpus(mixed_corpus, tmp_path):
    # intro, then summary, then paragraphs, cases in file order
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, "hash:32", out)
    ids, _ = parse_container(out)
    assert ids[:3] == ["q1#intro#0", "q1#paragraph#0", "q1#paragraph#1"]
    assert ids[3] == "d1#summary#0"
    assert ids[-2:] == ["d2#paragraph#0", "d2#paragraph#1"]


def test_rerun_is_byte_identical(mixed_corpus, tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    export_embeddings(mixed_corpus, "hash:48:3", a)
    export_embeddings(mixed_corpus, "hash:48:3", b)
    assert a.read_bytes() == b.read_bytes()
    assert (
        (tmp_path / "a.bin.manifest.json").read_text()
        == (tmp_path / "b.bin.manifest.json").read_text()
    )


def test_rows_match_encoder_output(mixed_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, "hash:64:9", out)
    _, vectors = parse_container(out)
    texts = [t for case in read_corpus(mixed_corpus) for _, t in case.segments()]
    assert np.array_equal(vectors, HashEncoder(64, 9).encode(texts))


def test_hash_rows_match_naive_oracle():
    rng = np.random.default_rng(42)
    words = [f"w{i:02d}" for i in range(40)]
    for _ in range(50):
        tokens = list(rng.choice(words, size=rng.integers(1, 30)))
        dim = int(rng.integers(4, 64))
        seed = int(rng.integers(0, 5))
        want = np.zeros(dim)
        for token in tokens:
            digest = hashlib.sha256(f"{seed}:{token}".encode()).digest()
            bucket = int.from_bytes(digest[:4], "little") % dim
            want[bucket] += 1.0 if digest[4] & 1 else -1.0
        norm = np.linalg.norm(want)
        if norm > 0:
            want /= norm
        got = HashEncoder(dim, seed).encode([" ".join(tokens)])[0]
        assert np.array_equal(got, want.astype(np.float32))


def test_nonzero_rows_are_unit_norm(mixed_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, "hash:128", out)
    _, vectors = parse_container(out)
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    assert np.all(np.abs(norms - 1.0) < 1e-6)


def test_empty_paragraph_gets_zero_vector_and_warning(tmp_path):
    # hand-built line: the engine's own writer refuses empty segments
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text(
        json.dumps({"case_id": "e1", "intro": None, "summary": None,
                    "paragraphs": ["", "real text here"]}) + "\n"
    )
    out = tmp_path / "emb.bin"
    export_embeddings(corpus, "hash:32", out)
    ids, vectors = parse_container(out)
    assert ids == ["e1#paragraph#0", "e1#paragraph#1"]
    assert not vectors[0].any()
    assert vectors[1].any()
    manifest = read_manifest(out)
    assert manifest["warnings"] == ["zero vector for empty text at e1#paragraph#0"]


def test_document_granularity_one_row_per_case(mixed_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, "hash:64", out, granularity="document")
    ids, vectors = parse_container(out)
    assert ids == ["q1", "d1", "d2"]
    docs = [case.document_text() for case in read_corpus(mixed_corpus)]
    assert np.array_equal(vectors, HashEncoder(64, 0).encode(docs))


def test_related_texts_land_closer(mixed_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    export_embeddings(mixed_corpus, "hash:256", out, granularity="document")
    ids, vectors = parse_container(out)
    by_id = dict(zip(ids, vectors.astype(np.float64)))
    # q1 and d1 share the cargo vocabulary, d2 is about zoning
    assert by_id["q1"] @ by_id["d1"] > by_id["q1"] @ by_id["d2"]


def test_seed_changes_the_embedding_space(four_paragraph_corpus, tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    export_embeddings(four_paragraph_corpus, "hash:64:0", a)
    export_embeddings(four_paragraph_corpus, "hash:64:1", b)
    _, va = parse_container(a)
    _, vb = parse_container(b)
    assert not np.array_equal(va, vb)


def test_bad_refs_rejected(four_paragraph_corpus, tmp_path):
    out = tmp_path / "emb.bin"
    with pytest.raises(ValueError, match="unknown encoder ref"):
        export_embeddings(four_paragraph_corpus, "word2vec:300", out)
    with pytest.raises(ValueError, match="integer"):
        export_embeddings(four_paragraph_corpus, "hash:big", out)
    with pytest.raises(ValueError, match="dim must be >= 1"):
        export_embeddings(four_paragraph_corpus, "hash:0", out)
    with pytest.raises(ValueError, match="granularity"):
        export_embeddings(four_paragraph_corpus, "hash:64", out, granularity="sentence")


def test_checkpoint_refs_need_model_dependencies(monkeypatch):
    # a None entry makes the import machinery raise ImportError
    monkeypatch.setitem(sys.modules, "torch", None)
    monkeypatch.setitem(sys.modules, "transformers", None)
    with pytest.raises(RuntimeError, match="optional model dependencies"):
        resolve_encoder("hf:/some/checkpoint")
