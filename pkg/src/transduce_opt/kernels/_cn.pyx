# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Crank-Nicolson recurrences; see ``_cn_py`` for the reference versions."""

import numpy as np


def cn_forward(const double complex[:, :, ::1] pinv,
               const double complex[:, ::1] pinv_src,
               const double complex[::1] coef,
               Py_ssize_t n_steps):
    cdef Py_ssize_t m = pinv.shape[0]
    cdef Py_ssize_t d = pinv.shape[1]
    if coef.shape[0] < n_steps:
        raise ValueError("coef shorter than n_steps")
    psi_arr = np.zeros((n_steps + 1, d), dtype=np.complex128)
    cdef double complex[:, ::1] psi = psi_arr
    cdef Py_ssize_t k, j, r, c
    cdef double complex acc, ck
    with nogil:
        j = 0
        for k in range(n_steps):
            ck = coef[k]
            for r in range(d):
                acc = 0
                for c in range(d):
                    acc = acc + pinv[j, r, c] * psi[k, c]
                psi[k + 1, r] = 2.0 * acc - psi[k, r] + ck * pinv_src[j, r]
            j += 1
            if j == m:
                j = 0
    return psi_arr


def cn_adjoint(const double complex[:, :, ::1] pinv,
               const double complex[:, ::1] psi,
               const double complex[:, ::1] g,
               double dt):
    cdef Py_ssize_t m = pinv.shape[0]
    cdef Py_ssize_t d = pinv.shape[1]
    cdef Py_ssize_t n = d // 2
    cdef Py_ssize_t n_steps = psi.shape[0] - 1
    grad_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    mu_arr = np.array(g[n_steps], dtype=np.complex128)
    lam_arr = np.zeros(d, dtype=np.complex128)
    cdef double complex[::1] mu = mu_arr
    cdef double complex[::1] lam = lam_arr
    cdef Py_ssize_t k, j, r, c
    cdef double complex acc, z
    with nogil:
        for k in range(n_steps - 1, -1, -1):
            j = k % m
            for r in range(d):
                acc = 0
                for c in range(d):
                    acc = acc + pinv[j, r, c] * mu[c]
                lam[r] = acc
            z = 0
            for r in range(n):
                z = z + lam[r] * (psi[k, r + n] + psi[k + 1, r + n])
                z = z + lam[r + n] * (psi[k, r] + psi[k + 1, r])
            grad[j] += dt * z.imag
            for r in range(d):
                mu[r] = g[k, r] + 2.0 * lam[r] - mu[r]
    return grad_arr


# The monodromy chain is a product of dense matrices, which BLAS already does
# well; the batched tree reduction in ``_cn_py`` beats a compiled loop here.
from ._cn_py import cn_chain  # noqa: E402
