"""The three batch operations: embed a corpus, summarize it, score pairs."""

from __future__ import annotations

from pathlib import Path

from .corpus_io import read_corpus
from .models import resolve_encoder, resolve_pair_scorer, resolve_summarizer
from .outputs import (
    AdapterManifest,
    SummaryRecord,
    atomic_write_bytes,
    atomic_write_text,
    file_sha256,
    read_summaries,
    render_embeddings,
    render_pair_scores,
    render_summaries,
    write_manifest,
)

# whole-case text handed to a summarizer is cut at this many words
SUMMARY_INPUT_TOKEN_LIMIT = 8192
# pair scoring keeps the head of the query, candidate fills the rest
PAIR_QUERY_WORD_LIMIT = 100
PAIR_INPUT_TOKEN_LIMIT = 512

GRANULARITIES = ("paragraph", "document")


def export_embeddings(corpus_path, model_ref: str, out_path, granularity: str = "paragraph") -> Path:
    """Embed every segment (or whole case) and write the vector container.

    Empty text still gets a row so ids stay aligned with the corpus; the row
    is forced to the zero vector and flagged in the manifest warnings.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity: {granularity!r}")
    encoder = resolve_encoder(model_ref)
    cases = read_corpus(corpus_path)
    ids: list[str] = []
    texts: list[str] = []
    if granularity == "paragraph":
        for case in cases:
            for segment_id, text in case.segments():
                ids.append(segment_id)
                texts.append(text)
    else:
        for case in cases:
            ids.append(case.case_id)
            texts.append(case.document_text())
    if not ids:
        raise ValueError(f"{corpus_path}: nothing to embed")

    vectors = encoder.encode(texts)
    warnings = []
    for i, text in enumerate(texts):
        if not text.strip():
            vectors[i] = 0.0
            warnings.append(f"zero vector for empty text at {ids[i]}")

    atomic_write_bytes(out_path, render_embeddings(ids, vectors))
    info = encoder.describe()
    write_manifest(
        AdapterManifest(
            model=info["model"],
            revision=info["revision"],
            max_sequence_length=info["max_sequence_length"],
            parameters={**info["parameters"], "granularity": granularity},
            input_hashes={"corpus": file_sha256(corpus_path)},
            warnings=warnings,
        ),
        out_path,
    )
    return Path(out_path)


def summarize_cases(corpus_path, model_ref: str, out_path, ratio: float = 0.10) -> Path:
    """Write one summary record per case.

    A failing case gets an error-flagged record instead of killing the
    batch; an empty case is flagged the same way.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    summarizer = resolve_summarizer(model_ref)
    cases = read_corpus(corpus_path)
    if not cases:
        raise ValueError(f"{corpus_path}: no cases to summarize")

    records: list[SummaryRecord] = []
    for case in cases:
        text = " ".join(case.document_text().split()[:SUMMARY_INPUT_TOKEN_LIMIT])
        if not text:
            records.append(SummaryRecord(case.case_id, "", ratio, error="empty case"))
            continue
        try:
            summary = summarizer.summarize(text, ratio)
        except Exception as exc:
            records.append(
                SummaryRecord(case.case_id, "", ratio, error=f"generation failed: {exc}")
            )
            continue
        records.append(SummaryRecord(case.case_id, summary, ratio))

    atomic_write_text(out_path, render_summaries(records))
    info = summarizer.describe()
    write_manifest(
        AdapterManifest(
            model=info["model"],
            revision=info["revision"],
            max_sequence_length=info["max_sequence_length"],
            parameters={
                **info["parameters"],
                "ratio": ratio,
                "input_token_limit": SUMMARY_INPUT_TOKEN_LIMIT,
            },
            input_hashes={"corpus": file_sha256(corpus_path)},
            warnings=[r.case_id for r in records if r.error],
        ),
        out_path,
    )
    return Path(out_path)


def read_pairs(path) -> list[tuple[str, str]]:
    """Parse the two-column pair request file."""
    pairs: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2:
                raise ValueError(f"{path}:{lineno}: expected query_id<TAB>case_id")
            pair = (fields[0], fields[1])
            if pair in seen:
                raise ValueError(f"{path}:{lineno}: duplicate pair {pair}")
            seen.add(pair)
            pairs.append(pair)
    if not pairs:
        raise ValueError(f"{path}: no pairs requested")
    return pairs


def score_pairs(
    query_summaries_path,
    candidate_summaries_path,
    pairs_path,
    model_ref: str,
    out_path,
) -> Path:
    """Score every requested pair; a missing summary is a hard error.

    The query keeps its first PAIR_QUERY_WORD_LIMIT words, the candidate
    fills the remaining input budget, so long texts cannot starve the pair
    of query signal.
    """
    scorer = resolve_pair_scorer(model_ref)
    queries = read_summaries(query_summaries_path)
    candidates = read_summaries(candidate_summaries_path)
    pairs = read_pairs(pairs_path)

    rows: list[tuple[str, str, float]] = []
    for query_id, case_id in pairs:
        if query_id not in queries:
            raise ValueError(f"no query summary for {query_id!r}")
        if case_id not in candidates:
            raise ValueError(f"no candidate summary for {case_id!r}")
        q_words = queries[query_id].summary_text.split()[:PAIR_QUERY_WORD_LIMIT]
        budget = PAIR_INPUT_TOKEN_LIMIT - len(q_words)
        c_words = candidates[case_id].summary_text.split()[:budget]
        score = float(scorer.score(" ".join(q_words), " ".join(c_words)))
        if not 0.0 <= score <= 1.0:
            raise ValueError(
                f"scorer left [0, 1] on pair ({query_id}, {case_id}): {score}"
            )
        rows.append((query_id, case_id, score))

    atomic_write_text(out_path, render_pair_scores(rows))
    info = scorer.describe()
    write_manifest(
        AdapterManifest(
            model=info["model"],
            revision=info["revision"],
            max_sequence_length=info["max_sequence_length"],
            parameters={
                **info["parameters"],
                "query_word_limit": PAIR_QUERY_WORD_LIMIT,
                "input_token_limit": PAIR_INPUT_TOKEN_LIMIT,
            },
            input_hashes={
                "query_summaries": file_sha256(query_summaries_path),
                "candidate_summaries": file_sha256(candidate_summaries_path),
                "pairs": file_sha256(pairs_path),
            },
        ),
        out_path,
    )
    return Path(out_path)
