"""Flat pipeline configuration.

The config file is plain ``key = value`` lines: ``#`` lines are comments,
strings may be double-quoted (JSON escaping), booleans are ``true``/
``false``. Unknown keys are errors. ``to_text`` emits the canonical form,
and parse(to_text(cfg)) round-trips exactly. When no file is given the
PARAFUSE_CONFIG environment variable is consulted, then built-in defaults.

List-valued settings are packed into strings to keep the format flat:
comma-separated ints (``recall_depths``), ``alpha:beta`` weight pairs
(``weight_grid``), ``lo-hi`` inclusive ranges (``cutoff_range``).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

ENV_VAR = "PARAFUSE_CONFIG"


@dataclass
class PipelineConfig:
    # inputs
    task1_dir: str = ""
    labels_file: str = ""
    task2_dir: str = ""
    out_dir: str = "out"
    # ingestion
    validation_count: int = 100
    dedup_threshold: int = 100
    french_margin: float = 0.2
    # lexical index
    granularity: str = "paragraph"
    k1: float = 1.2
    b: float = 0.75
    # embeddings
    embedding_dim: int = 256
    embedding_seed: int = 13
    document_token_limit: int = 512
    embeddings_file: str = ""
    # retrieval and aggregation
    split: str = "validation"
    paragraph_depth: int = 100
    aggregated_depth: int = 1000
    aggregation: str = "positional"
    # fusion
    alpha: float = 3.0
    beta: float = 1.0
    normalize_fusion: bool = False
    weight_grid: str = "1:1,2:1,3:1,4:1"
    sweep_metric: str = "recall@500"
    # evaluation
    cutoff_k: int = 7
    recall_depths: str = "100,200,300,500"
    eval_mode: str = "macro"
    cutoff_range: str = "1-20"
    run_tag: str = "parafuse"
    # candidate entailment
    task2_cutoff: int = 1
    task2_alpha: float = 4.0
    task2_beta: float = 1.0
    task2_embeddings_file: str = ""
    # reranking
    pair_scores_file: str = ""
    rerank_depth: int = 10


_FIELDS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _coerce(key: str, text: str):
    if key not in _FIELDS:
        raise ValueError(f"unknown config key: {key!r}")
    kind = _FIELDS[key]
    text = text.strip()
    if kind == "bool":
        if text not in ("true", "false"):
            raise ValueError(f"{key}: expected true or false, got {text!r}")
        return text == "true"
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ValueError(f"{key}: expected an integer, got {text!r}") from None
    if kind == "float":
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"{key}: expected a number, got {text!r}") from None
    if text.startswith('"'):
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            raise ValueError(f"{key}: bad quoted string {text!r}") from None
        if not isinstance(value, str):
            raise ValueError(f"{key}: bad quoted string {text!r}")
        return value
    return text


def parse_config(text: str) -> PipelineConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value")
        key = key.strip()
        try:
            values[key] = _coerce(key, value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return PipelineConfig(**values)


def to_text(config: PipelineConfig) -> str:
    lines = []
    for field in dataclasses.fields(PipelineConfig):
        value = getattr(config, field.name)
        if field.type == "bool":
            rendered = "true" if value else "false"
        elif field.type == "str":
            rendered = json.dumps(value, ensure_ascii=False)
        else:
            rendered = repr(value) if field.type == "float" else str(value)
        lines.append(f"{field.name} = {rendered}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Config from an explicit path, else $PARAFUSE_CONFIG, else defaults."""
    if path is None:
        env = os.environ.get(ENV_VAR, "").strip()
        if not env:
            return PipelineConfig()
        path = env
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def apply_overrides(config: PipelineConfig, overrides: dict[str, str]) -> PipelineConfig:
    """New config with string overrides coerced per the schema."""
    coerced = {key: _coerce(key, text) for key, text in overrides.items()}
    return dataclasses.replace(config, **coerced)


def parse_int_list(text: str, key: str = "recall_depths") -> tuple[int, ...]:
    try:
        values = tuple(int(piece) for piece in text.split(",") if piece.strip())
    except ValueError:
        raise ValueError(f"{key}: bad integer list {text!r}") from None
    if not values:
        raise ValueError(f"{key}: empty list")
    return values


def parse_weight_grid(text: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        alpha_text, sep, beta_text = piece.partition(":")
        if not sep:
            raise ValueError(f"weight_grid: expected alpha:beta, got {piece!r}")
        try:
            pairs.append((float(alpha_text), float(beta_text)))
        except ValueError:
            raise ValueError(f"weight_grid: bad pair {piece!r}") from None
    if not pairs:
        raise ValueError("weight_grid: empty grid")
    return tuple(pairs)


def parse_int_range(text: str, key: str = "cutoff_range") -> range:
    low_text, sep, high_text = text.partition("-")
    try:
        if sep:
            low, high = int(low_text), int(high_text)
        else:
            low = high = int(low_text)
    except ValueError:
        raise ValueError(f"{key}: bad range {text!r}") from None
    if low < 1 or high < low:
        raise ValueError(f"{key}: bad range {text!r}")
    return range(low, high + 1)
