"""Hot loops behind the public solvers.

The backend is chosen once at import time from the ``DFDL_BACKEND``
environment variable: ``numba`` (default, compiled loops) or ``numpy``
(vectorized fallback). If numba cannot be imported the numpy backend is used.
Both backends stay importable as ``dfdl.kernels._numpy`` / ``dfdl.kernels._numba``
for benchmarks and cross-checks.
"""

import logging
import os

log = logging.getLogger(__name__)

_requested = os.environ.get("DFDL_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    log.warning("unknown DFDL_BACKEND=%r, using numpy", _requested)
    _requested = "numpy"

if _requested == "numba":
    try:
        from . import _numba as _impl
    except ImportError:  # pragma: no cover - numba missing
        log.warning("numba unavailable, falling back to numpy kernels")
        from . import _numpy as _impl
        _requested = "numpy"
else:
    from . import _numpy as _impl

BACKEND = _requested

omp_batch = _impl.omp_batch
lasso_batch = _impl.lasso_batch
bcd_sweep = _impl.bcd_sweep

from ._numpy import kkt_violation  # noqa: E402

__all__ = ["BACKEND", "omp_batch", "lasso_batch", "bcd_sweep", "kkt_violation"]
