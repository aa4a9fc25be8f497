"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the
pure-Python module is the fallback.  Set ``XPAR_KERNELS=python`` (or ``c``)
to force a backend, e.g. for the comparison benchmark.
"""

from __future__ import annotations

import os

from . import _kernels_py

pure = _kernels_py
try:
    from . import _kernels as compiled
except ImportError:  # extension not built; everything still works, slower
    compiled = None

_forced = os.environ.get("XPAR_KERNELS", "").strip().lower()
if _forced == "python":
    active = pure
elif _forced == "c":
    if compiled is None:
        raise ImportError("XPAR_KERNELS=c but the compiled kernels are not available")
    active = compiled
else:
    active = compiled if compiled is not None else pure


def backends():
    """Available backends by name."""
    out = {"python": pure}
    if compiled is not None:
        out["c"] = compiled
    return out
