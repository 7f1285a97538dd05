"""Builds the optional Cython kernel; the package falls back to numpy without it."""

import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("UAVM_NO_EXTENSION", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "uavm.kernels._ckernels",
                    ["src/uavm/kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
