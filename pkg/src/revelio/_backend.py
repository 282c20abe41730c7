"""Pick the bit-row kernels: compiled extension if importable, else pure Python.

Set ``REVELIO_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _purepy

pure = _purepy

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("REVELIO_PURE_PYTHON", "") in ("", "0"):
    kernels = compiled
    NAME = "compiled"
else:
    kernels = _purepy
    NAME = "python"


def get(name: str | None = None):
    """Return ``(name, module)`` for ``"compiled"``, ``"python"`` or the default."""
    if name is None:
        return NAME, kernels
    if name == "python":
        return "python", _purepy
    if name == "compiled":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available (extension not built)")
        return "compiled", compiled
    raise ValueError(f"unknown backend {name!r}")
