# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled 1D kernels: edge flux assembly and the Thomas tridiagonal solve."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


def edge_flux(double[::1] u, double[::1] coef, double p, double inv_h, double eps):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t e
    cdef double g, a, ap, flux
    cdef double ih2 = inv_h * inv_h
    cdef int mode = 1 if p == 3.0 else (2 if p == 4.0 else 0)
    grad_arr = np.zeros(n)
    stiff_arr = np.empty(n - 1)
    cdef double[::1] grad = grad_arr
    cdef double[::1] stiff = stiff_arr
    with nogil:
        if p == 2.0:
            for e in range(n - 1):
                g = (u[e + 1] - u[e]) * inv_h
                flux = coef[e] * g * inv_h
                grad[e] -= flux
                grad[e + 1] += flux
                stiff[e] = coef[e] * ih2
        else:
            for e in range(n - 1):
                g = (u[e + 1] - u[e]) * inv_h
                a = fabs(g)
                if mode == 2:
                    ap = a * a
                elif mode == 1:
                    ap = a
                else:
                    ap = pow(a, p - 2.0)
                flux = coef[e] * ap * g * inv_h
                grad[e] -= flux
                grad[e + 1] += flux
                if ap < eps:
                    ap = eps
                stiff[e] = coef[e] * (p - 1.0) * ap * ih2
    return grad_arr, stiff_arr


def tridiag_solve(double[::1] lower, double[::1] diag, double[::1] upper, double[::1] rhs):
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double m
    cp_arr = np.empty(n)
    x_arr = np.empty(n)
    cdef double[::1] cp = cp_arr
    cdef double[::1] x = x_arr
    if diag[0] == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    with nogil:
        cp[0] = (upper[0] / diag[0]) if n > 1 else 0.0
        x[0] = rhs[0] / diag[0]
        for i in range(1, n):
            m = diag[i] - lower[i - 1] * cp[i - 1]
            if i < n - 1:
                cp[i] = upper[i] / m
            x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / m
        for i in range(n - 2, -1, -1):
            x[i] -= cp[i] * x[i + 1]
    return x_arr
