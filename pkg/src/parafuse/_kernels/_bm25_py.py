"""NumPy fallback for the compiled scoring kernel.

Operation order matches the compiled version exactly so both backends
produce bitwise-identical float64 scores.
"""

from __future__ import annotations

import numpy as np


def accumulate_term(scores, ordinals, tfs, weight, k1_plus_1, norm):
    """Add one query term's saturated-tf contribution to `scores` in place.

    scores: float64[n_items], running totals.
    ordinals, tfs: the term's postings (int32 item ordinals, float64 tfs).
    weight: query tf times idf for this term.
    norm: float64[n_items], precomputed k1*(1 - b + b*len/avglen).
    """
    sub = norm[ordinals]
    # ordinals are unique within one posting list, so fancy += is safe
    scores[ordinals] += weight * (tfs * k1_plus_1 / (tfs + sub))
