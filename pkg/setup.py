"""Build glue for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-Python
implementation is selected at import time); building it just speeds up the
token-diff and n-gram hot loops. Set REVISE_PURE_PYTHON=1 to skip the
extension build entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("REVISE_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "revise._ckernels",
                    sources=["src/revise/_ckernels.pyx"],
                    optional=True,
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython available: install pure-Python only.
        ext_modules = []

setup(ext_modules=ext_modules)
