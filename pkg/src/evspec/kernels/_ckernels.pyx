# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contracts as ``_pykernels``."""
import numpy as np

from libc.math cimport log, INFINITY
from scipy.linalg.cython_blas cimport dsyrk, dtrsm
from scipy.linalg.cython_lapack cimport dpotrf


def band_terms(const double[::1] b, const double[::1] f_land, const double[::1] f_ocean,
               const double[:, ::1] W, const double[:, ::1] G):
    cdef int N = W.shape[0]
    cdef int q = G.shape[1]
    cdef int n, j, info = 0
    cdef double one = 1.0, zero = 0.0, logdet = 0.0, quad = 0.0, bn, val
    cdef char uplo = b'L', trans = b'N', side = b'L', diag = b'N'

    Bf_arr = np.empty(N * N)
    C_arr = np.empty(N * N)
    Gf_arr = np.empty(N * q if q > 0 else 1)
    cdef double[::1] Bf = Bf_arr
    cdef double[::1] C = C_arr
    cdef double[::1] Gf = Gf_arr

    with nogil:
        # column-major B and G
        for n in range(N):
            bn = b[n]
            for j in range(N):
                Bf[n + N * j] = (bn * f_land[j] + (1.0 - bn) * f_ocean[j]) * W[n, j]
            for j in range(q):
                Gf[n + N * j] = G[n, j]
        dsyrk(&uplo, &trans, &N, &N, &one, &Bf[0], &N, &zero, &C[0], &N)
        dpotrf(&uplo, &N, &C[0], &N, &info)
    if info != 0:
        return INFINITY, INFINITY
    with nogil:
        for n in range(N):
            val = C[n + N * n]
            if val <= 0.0:
                info = 1
                break
            logdet += log(val)
    if info != 0:
        return INFINITY, INFINITY
    if q > 0:
        with nogil:
            dtrsm(&side, &uplo, &trans, &diag, &N, &q, &one, &C[0], &N, &Gf[0], &N)
            for n in range(N * q):
                quad += Gf[n] * Gf[n]
    return 2.0 * logdet, quad


def ar2_whiten(const double[:, :, ::1] eps, const double[::1] phi1,
               const double[::1] phi2, const double[::1] sigma):
    cdef Py_ssize_t S = eps.shape[0], K = eps.shape[1], R = eps.shape[2]
    cdef Py_ssize_t s, k, r
    cdef double p1, p2, inv
    out_arr = np.empty((S, K - 2 if K > 2 else 0, R))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for s in range(S):
            p1 = phi1[s]
            p2 = phi2[s]
            inv = 1.0 / sigma[s]
            for k in range(2, K):
                for r in range(R):
                    out[s, k - 2, r] = (eps[s, k, r] - p1 * eps[s, k - 1, r] - p2 * eps[s, k - 2, r]) * inv
    return out_arr


def ar2_colorize(const double[:, :, ::1] H, const double[::1] phi1, const double[::1] phi2,
                 const double[::1] sigma, Py_ssize_t burn_in):
    cdef Py_ssize_t S = H.shape[0], L = H.shape[1], R = H.shape[2]
    cdef Py_ssize_t s, k, r
    cdef double p1, p2, sg, prev1, prev2, cur
    out_arr = np.empty((S, L - burn_in, R))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for s in range(S):
            p1 = phi1[s]
            p2 = phi2[s]
            sg = sigma[s]
            for r in range(R):
                prev1 = 0.0
                prev2 = 0.0
                for k in range(L):
                    cur = p1 * prev1 + p2 * prev2 + sg * H[s, k, r]
                    if k >= burn_in:
                        out[s, k - burn_in, r] = cur
                    prev2 = prev1
                    prev1 = cur
    return out_arr
