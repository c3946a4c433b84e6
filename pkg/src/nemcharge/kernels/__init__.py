"""Kernel lane selection: compiled extension if available, NumPy otherwise.

Set ``NEMCHARGE_KERNELS=py`` or ``=c`` to force a lane (``c`` raises if the
extension is missing). ``BACKEND`` reports the active lane;
``available_backends()`` lists both lanes for parity tests and benchmarks.
"""

from __future__ import annotations

import os

from . import pykernels
from .pykernels import (  # noqa: F401  (shared constants)
    BISECT_MAX_ITER,
    BISECT_TOL_KWH,
    SLOPE_TIE_EPS,
    ZONE_CONSUMPTION,
    ZONE_PRODUCTION,
    ZONE_ZERO,
)

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_requested = os.environ.get("NEMCHARGE_KERNELS", "auto").lower()
if _requested == "py":
    _impl = pykernels
elif _requested == "c":
    if _ckernels is None:
        raise ImportError("NEMCHARGE_KERNELS=c but the compiled kernels are not built")
    _impl = _ckernels
elif _requested == "auto":
    _impl = _ckernels if _ckernels is not None else pykernels
else:
    raise ImportError(f"unknown NEMCHARGE_KERNELS value: {_requested!r}")

BACKEND = "c" if _impl is _ckernels else "py"

slope_inverse = _impl.slope_inverse
decide_batch = _impl.decide_batch
stage_values = _impl.stage_values


def available_backends() -> dict[str, object]:
    """Name -> module for every importable lane."""
    lanes: dict[str, object] = {"py": pykernels}
    if _ckernels is not None:
        lanes["c"] = _ckernels
    return lanes
