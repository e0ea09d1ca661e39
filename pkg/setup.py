"""Builds the optional compiled scoring kernel.

The package is pure Python except for one Cython extension; when no compiler
or Cython is available the build still succeeds and the NumPy fallback kernel
is used at runtime.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:  # source tree without Cython: fallback kernel only
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "parafuse._kernels._bm25_c",
                ["src/parafuse/_kernels/_bm25_c.pyx"],
                optional=True,
                extra_compile_args=["-O2"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
