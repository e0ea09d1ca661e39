"""Batch adapters that turn a normalized corpus into model-derived artifacts.

Three operations, each writing a file the retrieval pipeline reads directly:
segment embeddings, per-case summaries, and query/candidate pair scores.
Deterministic reference backends run with no checkpoints installed; ``hf:``
model refs load local transformer checkpoints when the optional model
dependencies are present.
"""

__version__ = "0.1.0"

from .ops import export_embeddings, score_pairs, summarize_cases

__all__ = ["export_embeddings", "score_pairs", "summarize_cases", "__version__"]
