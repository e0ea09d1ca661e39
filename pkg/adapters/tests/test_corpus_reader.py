"""Validation behaviour of the standalone corpus reader."""

import json

import pytest

from parafuse_adapters.corpus_io import read_corpus


def write_lines(tmp_path, *lines):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def record(case_id, intro=None, summary=None, paragraphs=()):
    return json.dumps({
        "case_id": case_id, "intro": intro, "summary": summary,
        "paragraphs": list(paragraphs),
    }, ensure_ascii=False)


def test_reads_what_the_engine_writes(mixed_corpus):
    cases = read_corpus(mixed_corpus)
    assert [c.case_id for c in cases] == ["q1", "d1", "d2"]
    assert cases[0].intro == "appeal against a cargo ruling"
    assert cases[1].summary == "carrier liability for grain damage"
    assert len(cases[2].paragraphs) == 2


def test_blank_lines_are_skipped(tmp_path):
    path = write_lines(tmp_path, record("a", paragraphs=["x"]), "", record("b", paragraphs=["y"]))
    assert [c.case_id for c in read_corpus(path)] == ["a", "b"]


def test_malformed_json_names_the_line(tmp_path):
    path = write_lines(tmp_path, record("a", paragraphs=["x"]), "{not json")
    with pytest.raises(ValueError, match=r"corpus\.jsonl:2: not valid JSON"):
        read_corpus(path)


def test_wrong_keys_rejected(tmp_path):
    path = write_lines(tmp_path, '{"case_id": "a", "intro": null, "paragraphs": []}')
    with pytest.raises(ValueError, match="exactly the keys"):
        read_corpus(path)
    extra = json.dumps({"case_id": "a", "intro": None, "summary": None,
                        "paragraphs": [], "rank": 1})
    with pytest.raises(ValueError, match="exactly the keys"):
        read_corpus(write_lines(tmp_path, extra))


def test_duplicate_case_rejected(tmp_path):
    path = write_lines(tmp_path, record("a", paragraphs=["x"]), record("a", paragraphs=["y"]))
    with pytest.raises(ValueError, match="duplicate case 'a'"):
        read_corpus(path)


def test_field_types_enforced(tmp_path):
    bad_intro = json.dumps({"case_id": "a", "intro": 7, "summary": None, "paragraphs": []})
    with pytest.raises(ValueError, match="intro must be a string or null"):
        read_corpus(write_lines(tmp_path, bad_intro))
    bad_par = json.dumps({"case_id": "a", "intro": None, "summary": None, "paragraphs": ["x", 3]})
    with pytest.raises(ValueError, match="paragraphs must be a list of strings"):
        read_corpus(write_lines(tmp_path, bad_par))
    bad_id = json.dumps({"case_id": "", "intro": None, "summary": None, "paragraphs": []})
    with pytest.raises(ValueError, match="case_id must be a non-empty string"):
        read_corpus(write_lines(tmp_path, bad_id))


def test_segment_ids_follow_the_shared_convention(tmp_path):
    path = write_lines(tmp_path, record("c9", intro="i", summary="s", paragraphs=["p", "q"]))
    (case,) = read_corpus(path)
    assert [sid for sid, _ in case.segments()] == [
        "c9#intro#0", "c9#summary#0", "c9#paragraph#0", "c9#paragraph#1",
    ]
    assert case.document_text() == "i s p q"
