"""Builds the optional compiled kernel; the package falls back to numpy without it."""

import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("MIMONOMA_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "mimonoma._kernels",
                ["src/mimonoma/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
