"""Numeric kernel backend selection.

The compiled extension (`_fast`, built from Cython) is preferred; the
NumPy fallback (`_pure`) is used when the extension is unavailable or when
YUMALAB_PURE_PYTHON is set to a non-empty value. Both expose the same six
functions; `BACKEND` names the one in use.
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("YUMALAB_PURE_PYTHON"):
    _impl = _pure
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.NAME

gini = _impl.gini
hhi = _impl.hhi
topk_sum = _impl.topk_sum
pearson = _impl.pearson
coalition_count = _impl.coalition_count
clip_benchmarks = _impl.clip_benchmarks

__all__ = [
    "BACKEND",
    "gini",
    "hhi",
    "topk_sum",
    "pearson",
    "coalition_count",
    "clip_benchmarks",
]
