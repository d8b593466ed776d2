# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled memory-kernel time stepper.

Mirrors _kernels_py.volterra_path exactly (same stepping scheme, same
summation order) with the O(T^2) history sum in a plain C loop.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def volterra_path(double omega0_sq, gamma, double h,
                  f_over_m=None, double x0=0.0, double v0=0.0):
    """Integrate xdd + omega0_sq x + int_0^t gamma(t-s) xd(s) ds = F/m.

    See _kernels_py.volterra_path for the contract.
    """
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0]
    cdef cnp.ndarray[double, ndim=1] x = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] v = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] f
    cdef bint forced = f_over_m is not None
    if forced:
        f = np.ascontiguousarray(f_over_m, dtype=np.float64)
    else:
        f = np.empty(0, dtype=np.float64)

    x[0] = x0
    v[0] = v0
    if n == 1:
        return x, v

    cdef double g0 = g[0]
    cdef double denom = 1.0 + 0.25 * h * h * g0
    cdef double anf = -omega0_sq * x0
    cdef double fi, xi1, mem, atil, vi1
    cdef Py_ssize_t i, j
    # a kernel that is identically zero contributes nothing to the sum
    cdef bint memory = bool(np.any(np.asarray(g) != 0.0))

    for i in range(n - 1):
        fi = f[i] if forced else 0.0
        xi1 = x[i] + h * v[i] + 0.5 * h * h * (anf + fi)
        if memory:
            mem = 0.5 * g[i + 1] * v[0]
            for j in range(1, i + 1):
                mem += g[i + 1 - j] * v[j]
            mem *= h
        else:
            mem = 0.0
        atil = -omega0_sq * xi1 - mem
        vi1 = (v[i] + 0.5 * h * (anf + atil) + h * fi) / denom
        anf = atil - 0.5 * h * g0 * vi1
        x[i + 1] = xi1
        v[i + 1] = vi1
    return x, v
