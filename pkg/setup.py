"""Build script for the optional compiled simplex kernel.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes the LP-heavy paths faster.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "dnnsplit._kernels._pivot_cy",
                ["src/dnnsplit/_kernels/_pivot_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
