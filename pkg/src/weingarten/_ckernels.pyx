# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in :mod:`weingarten._pykernels`."""

import numpy as np
from libc.math cimport sqrt, hypot
from libc.stdlib cimport malloc, free


# rows per block; work buffers stay in L1
cdef Py_ssize_t BLK = 128


cdef void _esym_block(const double* kappa, Py_ssize_t r0, Py_ssize_t nb, Py_ssize_t n, int m,
                      Py_ssize_t p, Py_ssize_t q, double* work, double* x) noexcept nogil:
    # work[j*BLK + b] <- e_j of row r0+b with columns p, q removed (q = -1: only p).
    # Rows go innermost so the recurrence vectorizes.
    cdef Py_ssize_t b, i, j, cnt = 0, top
    cdef double* lo
    cdef double* hi
    for b in range(nb):
        work[b] = 1.0
    for j in range(1, m + 1):
        for b in range(nb):
            work[j * BLK + b] = 0.0
    for i in range(n):
        if i == p or i == q:
            continue
        cnt += 1
        top = cnt if cnt < m else m
        for b in range(nb):
            x[b] = kappa[(r0 + b) * n + i]
        for j in range(top, 0, -1):
            hi = work + j * BLK
            lo = work + (j - 1) * BLK
            for b in range(nb):
                hi[b] += x[b] * lo[b]


def esym(double[:, ::1] kappa, int kmax):
    cdef Py_ssize_t N = kappa.shape[0], n = kappa.shape[1]
    cdef Py_ssize_t r0, nb, b, j
    out = np.empty((N, kmax + 1))
    if N == 0:
        return out
    cdef double[:, ::1] E = out
    cdef double* work = <double*> malloc((kmax + 1) * BLK * sizeof(double))
    cdef double* x = <double*> malloc(BLK * sizeof(double))
    if work == NULL or x == NULL:
        free(work)
        free(x)
        raise MemoryError()
    with nogil:
        r0 = 0
        while r0 < N:
            nb = N - r0 if N - r0 < BLK else BLK
            _esym_block(&kappa[0, 0], r0, nb, n, kmax, -1, -1, work, x)
            for b in range(nb):
                for j in range(kmax + 1):
                    E[r0 + b, j] = work[j * BLK + b]
            r0 += BLK
    free(work)
    free(x)
    return out


def esym_grad(double[:, ::1] kappa, int k):
    cdef Py_ssize_t N = kappa.shape[0], n = kappa.shape[1]
    cdef Py_ssize_t r0, nb, b, i
    out = np.zeros((N, n))
    if k < 1 or N == 0:
        return out
    cdef double[:, ::1] G = out
    cdef double* work = <double*> malloc(k * BLK * sizeof(double))
    cdef double* x = <double*> malloc(BLK * sizeof(double))
    if work == NULL or x == NULL:
        free(work)
        free(x)
        raise MemoryError()
    with nogil:
        r0 = 0
        while r0 < N:
            nb = N - r0 if N - r0 < BLK else BLK
            for i in range(n):
                _esym_block(&kappa[0, 0], r0, nb, n, k - 1, i, -1, work, x)
                for b in range(nb):
                    G[r0 + b, i] = work[(k - 1) * BLK + b]
            r0 += BLK
    free(work)
    free(x)
    return out


def esym_hess(double[:, ::1] kappa, int k):
    cdef Py_ssize_t N = kappa.shape[0], n = kappa.shape[1]
    cdef Py_ssize_t r0, nb, b, p, q
    cdef double v
    out = np.zeros((N, n, n))
    if k < 2 or N == 0:
        return out
    cdef double[:, :, ::1] H = out
    cdef double* work = <double*> malloc((k - 1) * BLK * sizeof(double))
    cdef double* x = <double*> malloc(BLK * sizeof(double))
    if work == NULL or x == NULL:
        free(work)
        free(x)
        raise MemoryError()
    with nogil:
        r0 = 0
        while r0 < N:
            nb = N - r0 if N - r0 < BLK else BLK
            for p in range(n):
                for q in range(p + 1, n):
                    _esym_block(&kappa[0, 0], r0, nb, n, k - 2, p, q, work, x)
                    for b in range(nb):
                        v = work[(k - 2) * BLK + b]
                        H[r0 + b, p, q] = v
                        H[r0 + b, q, p] = v
            r0 += BLK
    free(work)
    free(x)
    return out


def shape_eigs(h_in, hp_in, grad_in, hess_in):
    grad_arr = np.ascontiguousarray(grad_in, dtype=float)
    if grad_arr.shape[1] > 2:
        from weingarten import _pykernels
        return _pykernels.shape_eigs(h_in, hp_in, grad_in, hess_in)
    cdef double[::1] h = np.ascontiguousarray(h_in, dtype=float)
    cdef double[::1] hp = np.ascontiguousarray(hp_in, dtype=float)
    cdef double[:, ::1] grad = grad_arr
    cdef double[:, :, ::1] hess = np.ascontiguousarray(hess_in, dtype=float)
    cdef Py_ssize_t N = grad.shape[0], n = grad.shape[1]
    kappa_arr = np.empty((N, n))
    W_arr = np.empty(N)
    cdef double[:, ::1] kap = kappa_arr
    cdef double[::1] Wv = W_arr
    cdef Py_ssize_t r
    cdef double hh, hq, p1, p2, W, c, a11, a12, a22, pa11, pa12, pa21, pa22
    cdef double s11, s12, s22, m, d
    for r in range(N):
        hh = h[r]
        hq = hp[r]
        if n == 1:
            p1 = grad[r, 0]
            W = sqrt(hh * hh + p1 * p1)
            a11 = (-hh * hess[r, 0, 0] + 2.0 * hq * p1 * p1 + hh * hh * hq) / W
            Wv[r] = W
            kap[r, 0] = a11 / (W * W)
            continue
        p1 = grad[r, 0]
        p2 = grad[r, 1]
        W = sqrt(hh * hh + p1 * p1 + p2 * p2)
        a11 = (-hh * hess[r, 0, 0] + 2.0 * hq * p1 * p1 + hh * hh * hq) / W
        a22 = (-hh * hess[r, 1, 1] + 2.0 * hq * p2 * p2 + hh * hh * hq) / W
        a12 = (-hh * 0.5 * (hess[r, 0, 1] + hess[r, 1, 0]) + 2.0 * hq * p1 * p2) / W
        c = -1.0 / (hh * W * (hh + W))
        # P = I/h + c grad grad^T ; S = P a P
        pa11 = (1.0 / hh + c * p1 * p1) * a11 + c * p1 * p2 * a12
        pa12 = (1.0 / hh + c * p1 * p1) * a12 + c * p1 * p2 * a22
        pa21 = c * p1 * p2 * a11 + (1.0 / hh + c * p2 * p2) * a12
        pa22 = c * p1 * p2 * a12 + (1.0 / hh + c * p2 * p2) * a22
        s11 = pa11 * (1.0 / hh + c * p1 * p1) + pa12 * c * p1 * p2
        s22 = pa21 * c * p1 * p2 + pa22 * (1.0 / hh + c * p2 * p2)
        s12 = 0.5 * (pa11 * c * p1 * p2 + pa12 * (1.0 / hh + c * p2 * p2)
                     + pa21 * (1.0 / hh + c * p1 * p1) + pa22 * c * p1 * p2)
        m = 0.5 * (s11 + s22)
        d = hypot(0.5 * (s11 - s22), s12)
        kap[r, 0] = m + d
        kap[r, 1] = m - d
        Wv[r] = W
    return kappa_arr, W_arr
