"""Build the optional Cython kernels.

The package works without them; ``kakeyalab._backend`` falls back to the
numpy implementations when the extension is missing.
"""
import os
import warnings

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    warnings.warn("Cython not found, building pure-Python package only.")
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("KAKEYALAB_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "kakeyalab._kernels_cy",
                ["src/kakeyalab/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
