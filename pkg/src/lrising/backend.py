"""Backend selection: compiled kernels when available, pure Python otherwise.

Set LRISING_BACKEND=python to force the fallback (used by the benchmark).
Both backends share the RNG recurrence and update order, so results are
bitwise identical.
"""

from __future__ import annotations

import os

_forced = os.environ.get("LRISING_BACKEND", "").lower()

if _forced in ("", "cython", "compiled"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        if _forced:
            raise
        from . import _pykernels as _impl

        BACKEND = "python"
elif _forced == "python":
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    raise RuntimeError(f"unknown LRISING_BACKEND={_forced!r}")

mcmc_run = _impl.mcmc_run
gray_scan_reduce = _impl.gray_scan_reduce
verify_triangle_batch = _impl.verify_triangle_batch
census_contours = _impl.census_contours


def backend_name() -> str:
    return BACKEND
