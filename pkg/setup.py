"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure-Python kernels are selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install. Set RECLINK_PURE_PYTHON=1 to skip compilation.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if not os.environ.get("RECLINK_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/reclink/textsim/_kernels.pyx"],
            language_level=3,
        )
    except ImportError:
        print("warning: Cython not available, installing pure-Python kernels only",
              file=sys.stderr)

setup(ext_modules=ext_modules)
