import pytest
from parafuse.corpus import Case, write_corpus_jsonl


@pytest.fixture
def four_paragraph_corpus(tmp_path):
    """Single case, four paragraphs, no intro or summary."""
    cases = [
        Case("c1", None, None, [
            "alpha beta gamma delta",
            "epsilon zeta eta theta",
            "iota kappa lambda mu",
            "nu xi omicron pi",
        ]),
    ]
    path = tmp_path / "corpus.jsonl"
    write_corpus_jsonl(cases, path)
    return path


@pytest.fixture
def mixed_corpus(tmp_path):
    """Three cases exercising intro and summary segments plus shared vocabulary."""
    cases = [
        Case("q1", "appeal against a cargo ruling", None, [
            "the vessel carried grain under a charterparty",
            "the court found the carrier liable for the damage",
        ]),
        Case("d1", None, "carrier liability for grain damage", [
            "the charterparty allocated risk to the carrier",
            "damage to grain cargo was proven at trial",
        ]),
        Case("d2", None, None, [
            "a zoning variance for the municipal airfield",
            "noise abatement procedures were not followed",
        ]),
    ]
    path = tmp_path / "corpus.jsonl"
    write_corpus_jsonl(cases, path)
    return path
