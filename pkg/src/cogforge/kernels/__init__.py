"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback keeps the package
importable on installs without a C toolchain. Set COGFORGE_PURE=1 to force
the fallback (used by the benchmark and the backend-equivalence tests).
"""

import os

from . import _pyback

if os.environ.get("COGFORGE_PURE"):
    _impl = _pyback
    BACKEND = "python"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        _impl = _pyback
        BACKEND = "python"

align_affine = _impl.align_affine
quartet_counts = _impl.quartet_counts

__all__ = ["BACKEND", "align_affine", "quartet_counts"]
