"""Backend selection for the 1D kernels.

The compiled extension is used when it was built; otherwise the numpy/scipy
fallback is loaded. Setting ``SPLITSTEP_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("SPLITSTEP_PURE_PYTHON", "") not in ("", "0"):
    _backend = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _backend

        BACKEND = "cython"
    except ImportError:
        _backend = _pykernels
        BACKEND = "python"


def edge_flux(u, coef, p, inv_h, eps):
    return _backend.edge_flux(
        np.ascontiguousarray(u, dtype=float), np.ascontiguousarray(coef, dtype=float), p, inv_h, eps
    )


def tridiag_solve(lower, diag, upper, rhs):
    return _backend.tridiag_solve(*(np.ascontiguousarray(a, dtype=float) for a in (lower, diag, upper, rhs)))


__all__ = ["BACKEND", "edge_flux", "tridiag_solve"]
