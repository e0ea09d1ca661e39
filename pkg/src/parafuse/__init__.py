"""Two-stage legal case retrieval.

Stage one ranks cases by querying a BM25 (and optionally a dense) index
with every paragraph of the query case and aggregating the paragraph hits
positionally; stage two fuses the retrievers and re-ranks a short head with
externally produced pair scores. The same machinery ranks candidate pools
for the entailment task.
"""

__version__ = "0.1.0"

from .aggregation import ParagraphRunSet, aggregate
from .corpus import Case, DatasetSplit, ParagraphRef, segment_case
from .dense import EmbeddingMatrix, dense_topn, reference_embed
from .entailment import EntailmentQuery, rank_candidates
from .fusion import FusionWeights, fuse
from .lexical import Bm25Index, build_index, query_topn, tokenize
from .types import ScoredList

__all__ = [
    "Bm25Index",
    "Case",
    "DatasetSplit",
    "EmbeddingMatrix",
    "EntailmentQuery",
    "FusionWeights",
    "ParagraphRef",
    "ParagraphRunSet",
    "ScoredList",
    "aggregate",
    "build_index",
    "dense_topn",
    "fuse",
    "query_topn",
    "rank_candidates",
    "reference_embed",
    "segment_case",
    "tokenize",
]
