# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernel.

Same contract and the same IEEE operation order as the NumPy fallback in
_bm25_py, so scores agree bitwise between backends.
"""


def accumulate_term(double[::1] scores, const int[::1] ordinals,
                    const double[::1] tfs, double weight, double k1_plus_1,
                    const double[::1] norm):
    """Add one query term's saturated-tf contribution to `scores` in place."""
    cdef Py_ssize_t i, n = ordinals.shape[0]
    cdef int o
    cdef double tf
    for i in range(n):
        o = ordinals[i]
        tf = tfs[i]
        scores[o] += weight * (tf * k1_plus_1 / (tf + norm[o]))
