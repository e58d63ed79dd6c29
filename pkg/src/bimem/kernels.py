"""Kernel dispatch: the Cython extension when built, else the Python fallback.

Set ``BIMEM_PURE_PYTHON=1`` to force the fallback (useful for comparing the
two or on platforms without a compiler).
"""

from __future__ import annotations

import os

from . import _pykernels as python

if os.environ.get("BIMEM_PURE_PYTHON"):
    compiled = None
else:
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python

BACKEND = "cython" if compiled is not None else "python"

threshold_pairs = _impl.threshold_pairs
label_propagation = _impl.label_propagation
bm25_scores = _impl.bm25_scores

__all__ = ["BACKEND", "bm25_scores", "compiled", "label_propagation", "python", "threshold_pairs"]
