"""Build script: compiles the optional Cython path-simulation kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); the build therefore never fails hard on a missing
compiler or Cython.
"""

import numpy as np
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "stoprate._kernels._fastpath",
                ["src/stoprate/_kernels/_fastpath.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off: the NumPy fallback must reproduce the
                # kernel arithmetic operation-for-operation; FMA contraction
                # would change roundings.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
