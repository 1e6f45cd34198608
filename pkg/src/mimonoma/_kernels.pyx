# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-trial zero-forcing gain kernel."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"


def zf_gains(const double complex[:, :, ::1] G,
             const double complex[:, ::1] B,
             double singular_tol=1e-13):
    """Post-ZF gains ``1 / [(H^H H)^{-1}]_{qq}`` for ``H = G[t] @ B``.

    Returns an array of shape ``(T, M_eff)``; rows whose Gram matrix is
    numerically singular are filled with NaN.
    """
    cdef Py_ssize_t T = G.shape[0], N = G.shape[1], r = G.shape[2]
    cdef Py_ssize_t Me = B.shape[1]
    if B.shape[0] != r:
        raise ValueError("inner dimensions of G and B do not match")
    out = np.empty((T, Me), dtype=np.float64)
    cdef double[:, ::1] gains = out
    cdef double complex *H = <double complex *> malloc(N * Me * sizeof(double complex))
    cdef double complex *L = <double complex *> malloc(Me * Me * sizeof(double complex))
    cdef double complex *Y = <double complex *> malloc(Me * Me * sizeof(double complex))
    cdef Py_ssize_t t, i, j, k, n
    cdef double complex acc
    cdef double d, scale, s2
    cdef bint bad
    if H == NULL or L == NULL or Y == NULL:
        free(H); free(L); free(Y)
        raise MemoryError()
    try:
        with nogil:
            for t in range(T):
                # H = G[t] @ B
                for n in range(N):
                    for j in range(Me):
                        acc = 0
                        for k in range(r):
                            acc = acc + G[t, n, k] * B[k, j]
                        H[n * Me + j] = acc
                # Gram matrix (lower triangle) into L, then in-place Cholesky
                scale = 0.0
                for i in range(Me):
                    for j in range(i + 1):
                        acc = 0
                        for n in range(N):
                            acc = acc + H[n * Me + i] * H[n * Me + j].conjugate()
                        L[i * Me + j] = acc
                    scale = scale + L[i * Me + i].real
                bad = scale <= 0.0
                i = 0
                while i < Me and not bad:
                    for j in range(i + 1):
                        acc = L[i * Me + j]
                        for k in range(j):
                            acc = acc - L[i * Me + k] * L[j * Me + k].conjugate()
                        if i == j:
                            d = acc.real
                            if d <= singular_tol * scale:
                                bad = True
                                break
                            L[i * Me + i] = d ** 0.5
                        else:
                            L[i * Me + j] = acc / L[j * Me + j].real
                    i = i + 1
                if bad:
                    for j in range(Me):
                        gains[t, j] = 0.0 / 0.0
                    continue
                # Y = L^{-1} by forward substitution (lower triangular)
                for j in range(Me):
                    for i in range(Me):
                        if i < j:
                            Y[i * Me + j] = 0
                        elif i == j:
                            Y[i * Me + i] = 1.0 / L[i * Me + i].real
                        else:
                            acc = 0
                            for k in range(j, i):
                                acc = acc + L[i * Me + k] * Y[k * Me + j]
                            Y[i * Me + j] = -acc / L[i * Me + i].real
                # [A^{-1}]_qq = sum_i |Y_iq|^2
                for j in range(Me):
                    s2 = 0.0
                    for i in range(j, Me):
                        s2 = s2 + Y[i * Me + j].real * Y[i * Me + j].real \
                                + Y[i * Me + j].imag * Y[i * Me + j].imag
                    gains[t, j] = 1.0 / s2
    finally:
        free(H)
        free(L)
        free(Y)
    return out
