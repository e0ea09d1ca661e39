"""BM25 scoring against hand arithmetic and brute-force oracles."""

import math

import numpy as np
import pytest

from parafuse import _kernels
from parafuse.lexical import (
    Bm25Index,
    bm25_score,
    build_index,
    load_index,
    query_topn,
    save_index,
    score_all,
    tokenize,
    truncate_tokens,
)

THREE_DOCS = [
    ("d1", "the court ruled today"),
    ("d2", "the cargo ship arrived"),
    ("d3", "court of appeal court"),
]

# hand arithmetic for query "court" on THREE_DOCS (all lengths 4 = avg):
#   idf = ln(1 + (3 - 2 + 0.5)/(2 + 0.5)) = ln(1.6)
#   norm = k1*(1 - b + b*1) = 1.2
#   d1: tf=1 -> ln(1.6) * (1*2.2)/(1 + 1.2)
#   d3: tf=2 -> ln(1.6) * (2*2.2)/(2 + 1.2)
IDF_COURT = math.log(1.6)
SCORE_D1 = IDF_COURT * 2.2 / 2.2
SCORE_D3 = IDF_COURT * 4.4 / 3.2


def naive_bm25(docs, query_tokens, k1=1.2, b=0.75):
    """Dict-and-log reimplementation used as the independent oracle."""
    toks = {d: tokenize(t) for d, t in docs}
    n = len(docs)
    avg = sum(len(v) for v in toks.values()) / n
    scores = {}
    for doc_id, doc_tokens in toks.items():
        score = 0.0
        for term in set(query_tokens):
            tf = doc_tokens.count(term)
            if tf == 0:
                continue
            df = sum(1 for v in toks.values() if term in v)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            qtf = query_tokens.count(term)
            norm = k1 * (1 - b + b * len(doc_tokens) / avg)
            score += qtf * idf * tf * (k1 + 1) / (tf + norm)
        scores[doc_id] = score
    return scores


def test_tokenizer():
    assert tokenize("État-Unis") == ["état", "unis"]
    assert tokenize("snake_case under_score") == ["snake", "case", "under", "score"]
    assert tokenize("Court; court. COURT?") == ["court", "court", "court"]
    assert tokenize("") == []
    assert tokenize("1982 c 11") == ["1982", "c", "11"]


def test_truncate_tokens():
    assert truncate_tokens("one two three four", 2) == "one two"
    with pytest.raises(ValueError):
        truncate_tokens("x", 0)


class TestBuild:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            build_index([("a", "x"), ("a", "y")])

    def test_all_empty_rejected(self):
        with pytest.raises(ValueError, match="tokens"):
            build_index([("a", ""), ("b", "...")])

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            build_index(THREE_DOCS, k1=-0.1)
        with pytest.raises(ValueError):
            build_index(THREE_DOCS, b=1.5)
        with pytest.raises(ValueError):
            build_index(THREE_DOCS, granularity="sentence")

    def test_hand_verified_statistics(self):
        index = build_index(THREE_DOCS)
        assert index.item_ids == ["d1", "d2", "d3"]
        assert index.avg_length == 4.0
        ords, tfs = index.postings["court"]
        assert list(ords) == [0, 2] and list(tfs) == [1.0, 2.0]
        ords, tfs = index.postings["the"]
        assert list(ords) == [0, 1] and list(tfs) == [1.0, 1.0]
        assert index.idf("court") == pytest.approx(math.log(1.6), abs=0)
        assert index.idf("unseen") == 0.0


class TestScoring:
    def test_hand_computed_scores(self):
        index = build_index(THREE_DOCS)
        scores = score_all(index, "court")
        assert abs(scores[0] - SCORE_D1) < 1e-9
        assert scores[1] == 0.0
        assert abs(scores[2] - SCORE_D3) < 1e-9

    def test_repeated_query_term_doubles_exactly(self):
        index = build_index(THREE_DOCS)
        single = score_all(index, "court")
        double = score_all(index, "court court")
        assert double[0] == 2 * single[0]
        assert double[2] == 2 * single[2]

    def test_single_doc_match(self):
        index = build_index(THREE_DOCS)
        hits = query_topn(index, "cargo", 10, query_id="q")
        assert len(hits) == 1
        doc_id, score = hits.entries[0]
        assert doc_id == "d2" and score > 0

    def test_tie_breaks_by_id(self):
        index = build_index([("d2", "twin text here"), ("d1", "twin text here"),
                             ("d3", "other thing entirely")])
        top = query_topn(index, "twin text", 5)
        assert top.ids() == ["d1", "d2"]

    def test_bm25_score_matches_score_all_bitwise(self):
        rng = np.random.default_rng(42)
        vocab = [f"w{i}" for i in range(30)]
        for _ in range(30):
            docs = [
                (f"d{j}", " ".join(rng.choice(vocab, size=rng.integers(1, 40))))
                for j in range(int(rng.integers(2, 12)))
            ]
            index = build_index(docs)
            query = list(rng.choice(vocab, size=5))
            scores = score_all(index, query)
            for j, (doc_id, _) in enumerate(sorted(docs)):
                assert bm25_score(index, query, doc_id) == scores[j]

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(7)
        vocab = [f"w{i}" for i in range(25)]
        for _ in range(40):
            docs = [
                (f"d{j}", " ".join(rng.choice(vocab, size=rng.integers(1, 30))))
                for j in range(int(rng.integers(2, 10)))
            ]
            index = build_index(docs)
            query = list(rng.choice(vocab, size=int(rng.integers(1, 6))))
            expected = naive_bm25(docs, query)
            scores = score_all(index, query)
            for j, doc_id in enumerate(index.item_ids):
                assert scores[j] == pytest.approx(expected[doc_id], abs=1e-12)

    def test_topn_validation(self):
        index = build_index(THREE_DOCS)
        with pytest.raises(ValueError):
            query_topn(index, "court", 0)
        with pytest.raises(ValueError, match="unknown item"):
            bm25_score(index, ["court"], "ghost")


class TestKernelParity:
    @pytest.mark.skipif(not _kernels.HAVE_NATIVE,
                        reason="compiled kernel not built")
    def test_backends_agree_bitwise(self):
        rng = np.random.default_rng(42)
        vocab = [f"w{i}" for i in range(60)]
        docs = [
            (f"d{j:03d}", " ".join(rng.choice(vocab, size=rng.integers(5, 120))))
            for j in range(80)
        ]
        index = build_index(docs)
        queries = [" ".join(rng.choice(vocab, size=8)) for _ in range(25)]
        try:
            _kernels.use_backend("python")
            python_scores = [score_all(index, q) for q in queries]
            _kernels.use_backend("native")
            native_scores = [score_all(index, q) for q in queries]
        finally:
            _kernels.use_backend("auto")
        for ps, ns in zip(python_scores, native_scores):
            assert (ps == ns).all()

    def test_backend_selection(self):
        try:
            assert _kernels.use_backend("python") == "python"
            with pytest.raises(ValueError):
                _kernels.use_backend("turbo")
        finally:
            _kernels.use_backend("auto")
        if _kernels.HAVE_NATIVE:
            assert _kernels.BACKEND == "native"


class TestSerialization:
    def test_round_trip_scores_identical(self, tmp_path):
        rng = np.random.default_rng(3)
        vocab = [f"w{i}" for i in range(40)] + ["café", "naïve"]
        docs = [
            (f"d{j}", " ".join(rng.choice(vocab, size=rng.integers(1, 50))))
            for j in range(30)
        ]
        index = build_index(docs, granularity="paragraph", k1=1.4, b=0.6)
        path = tmp_path / "idx.pfix"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.granularity == "paragraph"
        assert loaded.k1 == 1.4 and loaded.b == 0.6
        assert loaded.item_ids == index.item_ids
        query = "café w3 w17 w17"
        assert (score_all(loaded, query) == score_all(index, query)).all()

    def test_save_is_deterministic(self, tmp_path):
        docs = list(reversed(THREE_DOCS))
        a, b = tmp_path / "a.pfix", tmp_path / "b.pfix"
        save_index(build_index(docs), a)
        save_index(build_index(list(THREE_DOCS)), b)
        assert a.read_bytes() == b.read_bytes()
        # save(load(save(x))) is byte-stable
        c = tmp_path / "c.pfix"
        save_index(load_index(a), c)
        assert c.read_bytes() == a.read_bytes()

    def test_corruption_detected(self, tmp_path):
        path = tmp_path / "idx.pfix"
        save_index(build_index(THREE_DOCS), path)
        raw = path.read_bytes()

        bad = tmp_path / "bad.pfix"
        bad.write_bytes(b"NOPE!" + raw[5:])
        with pytest.raises(ValueError, match="magic"):
            load_index(bad)

        bad.write_bytes(raw[:20])
        with pytest.raises(ValueError, match="truncated"):
            load_index(bad)

        bad.write_bytes(raw + b"\x00")
        with pytest.raises(ValueError, match="trailing"):
            load_index(bad)
