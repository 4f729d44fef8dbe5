"""Numpy/scipy implementations of the 1D hot kernels.

These are the fallback used when the compiled ``_ckernels`` module is not
available. Both backends share signatures and semantics.
"""
import numpy as np
from scipy.linalg import solve_banded


def edge_flux(u, coef, p, inv_h, eps):
    """Gradient and edge stiffness of ``sum_e coef_e |g_e|^p / p``.

    ``g_e = (u[e+1] - u[e]) * inv_h``. Returns ``(grad, stiff)`` where
    ``grad`` has the length of ``u`` and ``stiff[e] = coef_e (p-1)
    max(|g_e|^(p-2), eps) inv_h^2`` is the edge contribution to the Hessian.
    """
    g = np.diff(u) * inv_h
    a = np.abs(g)
    if p == 2.0:
        flux = coef * g * inv_h
        stiff = coef * (inv_h * inv_h)
    else:
        ap = a ** (p - 2.0)
        flux = coef * ap * g * inv_h
        stiff = coef * (p - 1.0) * np.maximum(ap, eps) * (inv_h * inv_h)
    grad = np.zeros_like(u)
    grad[:-1] -= flux
    grad[1:] += flux
    return grad, stiff


def tridiag_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower``/``upper`` have length n-1."""
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs, overwrite_ab=True, check_finite=False)
