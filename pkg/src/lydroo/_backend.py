"""Kernel selection.

The compiled kernel is used when it imports; set ``LYDROO_PURE_PYTHON=1``
to force the interpreted twin (both expose ``solve`` and ``solve_batch``).
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("LYDROO_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:  # extension not built
        kernels = _pykernels

BACKEND = kernels.BACKEND


def available_backends() -> dict:
    """Name -> kernel module for every backend importable in this install."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
