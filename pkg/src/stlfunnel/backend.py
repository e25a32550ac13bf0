"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; setting
STLFUNNEL_PURE_PYTHON=1 forces the numpy fallback (used by the benchmark to
compare both paths).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("STLFUNNEL_PURE_PYTHON") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

COMPILED = bool(getattr(kernels, "COMPILED", False))

forward_single = kernels.forward_single
adam_step = kernels.adam_step
