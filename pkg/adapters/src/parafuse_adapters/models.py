"""Model backends behind the ``model_ref`` strings.

A model ref is ``scheme:argument``. The deterministic reference backends run
everywhere with no model downloads; the ``hf:`` scheme loads a local
checkpoint lazily and needs the optional model dependencies installed.

encoders      hash:<dim>[:<seed>]   signed token-hash bag encoder
              hf:<path>[@revision]  transformer encoder, mean pooled
summarizers   lead                  leading sentences under the length cap
              hf:<path>[@revision]  seq2seq summarization checkpoint
pair scorers  overlap               Jaccard overlap of token sets
              hf:<path>[@revision]  cross encoder with a sigmoid head
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_RE.split(text.strip()) if s]


def _split_revision(argument: str) -> tuple[str, str]:
    path, _, revision = argument.partition("@")
    if not path:
        raise ValueError("model ref has an empty checkpoint path")
    return path, (revision or "local")


def _load_torch_stack():
    try:
        import torch
        import transformers
    except ImportError as exc:
        raise RuntimeError(
            "hf: model refs need the optional model dependencies; "
            "install with pip install 'parafuse-adapters[models]'"
        ) from exc
    return torch, transformers


class HashEncoder:
    """Deterministic signed token-hash encoder.

    Each lowercased whitespace token is hashed with sha256 over
    ``"{seed}:{token}"``; the first four digest bytes pick the bucket, bit 0
    of the fifth picks the sign. Rows are L2 normalized; text with no tokens
    stays the zero vector.
    """

    def __init__(self, dim: int = 256, seed: int = 0):
        if dim < 1:
            raise ValueError(f"encoder dim must be >= 1, got {dim}")
        if seed < 0:
            raise ValueError(f"encoder seed must be >= 0, got {seed}")
        self.dim = dim
        self.seed = seed
        self.max_sequence_length = None

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        prefix = f"{self.seed}:".encode()
        for row, text in enumerate(texts):
            for token in text.lower().split():
                digest = hashlib.sha256(prefix + token.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "little") % self.dim
                out[row, bucket] += 1.0 if digest[4] & 1 else -1.0
            norm = float(np.linalg.norm(out[row]))
            if norm > 0.0:
                out[row] /= norm
        return out.astype(np.float32)

    def describe(self) -> dict:
        return {
            "model": f"hash:{self.dim}:{self.seed}",
            "revision": "builtin",
            "max_sequence_length": self.max_sequence_length,
            "parameters": {"dim": self.dim, "seed": self.seed},
        }


class TransformerEncoder:
    """Mean-pooled hidden states from a local transformer checkpoint."""

    def __init__(self, argument: str):
        torch, transformers = _load_torch_stack()
        self.path, self.revision = _split_revision(argument)
        self._torch = torch
        self.tokenizer = transformers.AutoTokenizer.from_pretrained(self.path)
        self.model = transformers.AutoModel.from_pretrained(self.path)
        self.model.eval()
        self.max_sequence_length = int(
            getattr(self.model.config, "max_position_embeddings", 512)
        )

    def encode(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        rows = []
        with torch.no_grad():
            for start in range(0, len(texts), 16):
                batch = self.tokenizer(
                    texts[start : start + 16],
                    padding=True,
                    truncation=True,
                    max_length=self.max_sequence_length,
                    return_tensors="pt",
                )
                hidden = self.model(**batch).last_hidden_state
                mask = batch["attention_mask"].unsqueeze(-1)
                pooled = (hidden * mask).sum(1) / mask.sum(1).clamp(min=1)
                rows.append(pooled.float().cpu().numpy())
        return np.concatenate(rows, axis=0).astype(np.float32)

    def describe(self) -> dict:
        return {
            "model": self.path,
            "revision": self.revision,
            "max_sequence_length": self.max_sequence_length,
            "parameters": {"pooling": "mean"},
        }


class LeadSummarizer:
    """Keeps leading sentences while the summary stays under the word budget.

    Sentence granularity: the first sentence always survives, so a very
    short case summarizes to itself rather than to nothing.
    """

    def __init__(self):
        self.max_sequence_length = None

    def summarize(self, text: str, ratio: float) -> str:
        words = text.split()
        if not words:
            return ""
        budget = max(1, int(len(words) * ratio))
        kept: list[str] = []
        used = 0
        for sentence in split_sentences(text):
            size = len(sentence.split())
            if kept and used + size > budget:
                break
            kept.append(sentence)
            used += size
            if used >= budget:
                break
        return " ".join(kept)

    def describe(self) -> dict:
        return {
            "model": "lead",
            "revision": "builtin",
            "max_sequence_length": self.max_sequence_length,
            "parameters": {"granularity": "sentence"},
        }


class TransformerSummarizer:
    """Greedy seq2seq generation, post-trimmed to the word budget."""

    def __init__(self, argument: str):
        torch, transformers = _load_torch_stack()
        self.path, self.revision = _split_revision(argument)
        self._torch = torch
        self.tokenizer = transformers.AutoTokenizer.from_pretrained(self.path)
        self.model = transformers.AutoModelForSeq2SeqLM.from_pretrained(self.path)
        self.model.eval()
        self.max_sequence_length = int(getattr(self.model.config, "max_length", 1024))

    def summarize(self, text: str, ratio: float) -> str:
        torch = self._torch
        budget = max(1, int(len(text.split()) * ratio))
        batch = self.tokenizer(
            [text], truncation=True, max_length=self.max_sequence_length,
            return_tensors="pt",
        )
        with torch.no_grad():
            generated = self.model.generate(
                **batch, num_beams=1, do_sample=False,
                max_new_tokens=max(8, 2 * budget),
            )
        decoded = self.tokenizer.decode(generated[0], skip_special_tokens=True)
        # the checkpoint has no notion of the caller's budget; trim hard
        return " ".join(decoded.split()[:budget])

    def describe(self) -> dict:
        return {
            "model": self.path,
            "revision": self.revision,
            "max_sequence_length": self.max_sequence_length,
            "parameters": {"num_beams": 1, "do_sample": False},
        }


class OverlapScorer:
    """Jaccard overlap of lowercased token sets; identical texts score 1.0."""

    def __init__(self):
        self.max_sequence_length = None

    def score(self, query_text: str, candidate_text: str) -> float:
        q = set(query_text.lower().split())
        c = set(candidate_text.lower().split())
        union = q | c
        if not union:
            return 0.0
        return len(q & c) / len(union)

    def describe(self) -> dict:
        return {
            "model": "overlap",
            "revision": "builtin",
            "max_sequence_length": self.max_sequence_length,
            "parameters": {},
        }


class TransformerPairScorer:
    """Cross-encoder classification head squashed to [0, 1]."""

    def __init__(self, argument: str):
        torch, transformers = _load_torch_stack()
        self.path, self.revision = _split_revision(argument)
        self._torch = torch
        self.tokenizer = transformers.AutoTokenizer.from_pretrained(self.path)
        self.model = transformers.AutoModelForSequenceClassification.from_pretrained(self.path)
        self.model.eval()
        self.max_sequence_length = int(
            getattr(self.model.config, "max_position_embeddings", 512)
        )

    def score(self, query_text: str, candidate_text: str) -> float:
        torch = self._torch
        batch = self.tokenizer(
            query_text, candidate_text, truncation=True,
            max_length=self.max_sequence_length, return_tensors="pt",
        )
        with torch.no_grad():
            logits = self.model(**batch).logits[0]
        if logits.numel() > 1:
            value = torch.softmax(logits, dim=-1)[-1]
        else:
            value = torch.sigmoid(logits[0])
        return float(value)

    def describe(self) -> dict:
        return {
            "model": self.path,
            "revision": self.revision,
            "max_sequence_length": self.max_sequence_length,
            "parameters": {"head": "sigmoid"},
        }


def _parse_hash_args(argument: str) -> tuple[int, int]:
    if not argument:
        return 256, 0
    parts = argument.split(":")
    if len(parts) > 2:
        raise ValueError(f"hash ref takes at most dim and seed, got {argument!r}")
    try:
        dim = int(parts[0])
        seed = int(parts[1]) if len(parts) > 1 else 0
    except ValueError:
        raise ValueError(f"hash ref needs integer arguments, got {argument!r}") from None
    return dim, seed


def resolve_encoder(model_ref: str):
    scheme, _, argument = model_ref.partition(":")
    if scheme == "hash":
        dim, seed = _parse_hash_args(argument)
        return HashEncoder(dim, seed)
    if scheme == "hf":
        return TransformerEncoder(argument)
    raise ValueError(f"unknown encoder ref: {model_ref!r}")


def resolve_summarizer(model_ref: str):
    scheme, _, argument = model_ref.partition(":")
    if scheme == "lead" and not argument:
        return LeadSummarizer()
    if scheme == "hf":
        return TransformerSummarizer(argument)
    raise ValueError(f"unknown summarizer ref: {model_ref!r}")


def resolve_pair_scorer(model_ref: str):
    scheme, _, argument = model_ref.partition(":")
    if scheme == "overlap" and not argument:
        return OverlapScorer()
    if scheme == "hf":
        return TransformerPairScorer(argument)
    raise ValueError(f"unknown pair scorer ref: {model_ref!r}")
