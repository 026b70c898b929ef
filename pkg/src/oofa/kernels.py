"""Backend selection for the exchange-search kernels.

The compiled extension (oofa._kernels, Cython) is used when it built; the
numpy implementation is the fallback. Set OOFA_PURE_PYTHON=1 to force the
fallback, e.g. for the benchmark comparison.
"""
from __future__ import annotations

import os

if os.environ.get("OOFA_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME
dopt_best_swap = _impl.dopt_best_swap
chi2_best_swap = _impl.chi2_best_swap


def get_backend() -> str:
    """Name of the active kernel backend: "cython" or "python"."""
    return BACKEND
