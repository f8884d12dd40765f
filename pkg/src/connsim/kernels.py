"""Hot-loop kernels: the compiled extension when built, else the Python fallback.

Set ``CONNSIM_PURE_PYTHON=1`` to force the fallback.  Both backends produce
bit-identical output.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("CONNSIM_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "compiled"

planar_trace = _impl.planar_trace
planar_interchange = _impl.planar_interchange

__all__ = ["BACKEND", "planar_trace", "planar_interchange"]
