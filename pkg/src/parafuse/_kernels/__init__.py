"""Kernel backend selection.

The compiled extension is preferred when importable; the NumPy fallback is
always available. Set PARAFUSE_KERNEL=python (or =native) before import to
force a backend; use_backend() switches at runtime, which the benchmark and
the parity tests rely on.
"""

from __future__ import annotations

import os

from . import _bm25_py

try:
    from . import _bm25_c
except ImportError:
    _bm25_c = None

HAVE_NATIVE = _bm25_c is not None

BACKEND = "python"
accumulate_term = _bm25_py.accumulate_term


def use_backend(name: str) -> str:
    """Select the active kernel: "native", "python" or "auto".

    Returns the backend actually selected; asking for "native" without the
    compiled extension raises.
    """
    global BACKEND, accumulate_term
    if name == "auto":
        name = "native" if HAVE_NATIVE else "python"
    if name == "native":
        if not HAVE_NATIVE:
            raise RuntimeError("compiled kernel is not available")
        BACKEND = "native"
        accumulate_term = _bm25_c.accumulate_term
    elif name == "python":
        BACKEND = "python"
        accumulate_term = _bm25_py.accumulate_term
    else:
        raise ValueError(f"unknown kernel backend: {name!r}")
    return BACKEND


use_backend(os.environ.get("PARAFUSE_KERNEL", "auto").strip().lower() or "auto")
