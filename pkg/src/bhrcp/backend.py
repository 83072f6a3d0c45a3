"""Numerical backend selection.

The compiled extension ``bhrcp._kernels`` is preferred when it imported
cleanly; otherwise the pure-NumPy twin ``bhrcp._kernels_py`` is used.  Set
``BHRCP_BACKEND=python`` to force the fallback (useful for benchmarking and
debugging) or ``BHRCP_BACKEND=ext`` to make a missing extension a hard error.
"""

from __future__ import annotations

import os

_requested = os.environ.get("BHRCP_BACKEND", "").strip().lower()
if _requested not in {"", "ext", "python"}:
    raise ImportError(f"BHRCP_BACKEND must be 'ext' or 'python', got {_requested!r}")

if _requested == "python":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        if _requested == "ext":
            raise
        from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND_NAME: str = kernels.BACKEND
HAS_EXTENSION: bool = BACKEND_NAME == "ext"
