"""Kernel backend selection: compiled extension when built, pure Python
otherwise. Set EVOLOG_NO_EXT=1 to force the fallback (used by the
benchmark and for debugging)."""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("EVOLOG_NO_EXT"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

scan_pairs = _impl.scan_pairs
