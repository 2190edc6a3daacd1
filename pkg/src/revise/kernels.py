"""Kernel selection: compiled extension when available, pure Python otherwise.

Set REVISE_PURE_PYTHON=1 before import to force the pure-Python kernels even
when the extension is built (used by the benchmark and for debugging).
"""

from __future__ import annotations

import os

from revise import _kernels_py

if os.environ.get("REVISE_PURE_PYTHON"):
    _impl = _kernels_py
    KERNEL_BACKEND = "python"
else:
    try:
        from revise import _ckernels as _impl  # type: ignore[no-redef]

        KERNEL_BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        KERNEL_BACKEND = "python"

common_affix = _impl.common_affix
clipped_ngram_overlap = _impl.clipped_ngram_overlap

__all__ = ["KERNEL_BACKEND", "common_affix", "clipped_ngram_overlap"]
