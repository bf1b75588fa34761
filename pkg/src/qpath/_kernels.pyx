# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-column convolution kernels.

The Q-network applies edge-to-edge (E2E) and edge-to-node (E2N) operators to
an m x m matrix M (input channels already summed, since every output channel
shares one m x m weight grid):

    e2e:  out[o,i,j] = sum_k w[o,i,k] M[i,k] + sum_k w[o,k,j] M[k,j] + b[o]
    e2n:  out[o,i]   = sum_k w[o,i,k] M[i,k] + sum_k w[o,k,i] M[k,i] + b[o]

These loops dominate training time, so they are fused here to avoid the
temporaries the numpy fallback allocates.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def e2e_forward(cnp.ndarray[cnp.float64_t, ndim=2] m_sum,
                cnp.ndarray[cnp.float64_t, ndim=3] w,
                cnp.ndarray[cnp.float64_t, ndim=1] b):
    cdef Py_ssize_t c = w.shape[0], m = w.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((c, m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] row = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] col = np.empty(m)
    cdef Py_ssize_t o, i, j, k
    cdef double acc, bias
    for o in range(c):
        for i in range(m):
            acc = 0.0
            for k in range(m):
                acc += w[o, i, k] * m_sum[i, k]
            row[i] = acc
        for j in range(m):
            acc = 0.0
            for k in range(m):
                acc += w[o, k, j] * m_sum[k, j]
            col[j] = acc
        bias = b[o]
        for i in range(m):
            acc = row[i] + bias
            for j in range(m):
                out[o, i, j] = acc + col[j]
    return out


def e2e_backward(cnp.ndarray[cnp.float64_t, ndim=2] m_sum,
                 cnp.ndarray[cnp.float64_t, ndim=3] w,
                 cnp.ndarray[cnp.float64_t, ndim=3] dpre):
    cdef Py_ssize_t c = w.shape[0], m = w.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] dw = np.empty((c, m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] db = np.zeros(c)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dm = np.zeros((m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] drow = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dcol = np.empty(m)
    cdef Py_ssize_t o, i, j
    cdef double acc, g
    for o in range(c):
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += dpre[o, i, j]
            drow[i] = acc
            db[o] += acc
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += dpre[o, i, j]
            dcol[j] = acc
        for i in range(m):
            for j in range(m):
                g = drow[i] + dcol[j]
                dw[o, i, j] = g * m_sum[i, j]
                dm[i, j] += g * w[o, i, j]
    return dw, db, dm


def e2n_forward(cnp.ndarray[cnp.float64_t, ndim=2] m_sum,
                cnp.ndarray[cnp.float64_t, ndim=3] w,
                cnp.ndarray[cnp.float64_t, ndim=1] b):
    cdef Py_ssize_t c = w.shape[0], m = w.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((c, m))
    cdef Py_ssize_t o, i, k
    cdef double acc
    for o in range(c):
        for i in range(m):
            acc = b[o]
            for k in range(m):
                acc += w[o, i, k] * m_sum[i, k]
            for k in range(m):
                acc += w[o, k, i] * m_sum[k, i]
            out[o, i] = acc
    return out


def e2n_backward(cnp.ndarray[cnp.float64_t, ndim=2] m_sum,
                 cnp.ndarray[cnp.float64_t, ndim=3] w,
                 cnp.ndarray[cnp.float64_t, ndim=2] dpre):
    cdef Py_ssize_t c = w.shape[0], m = w.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] dw = np.empty((c, m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] db = np.zeros(c)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dm = np.zeros((m, m))
    cdef Py_ssize_t o, a, bb
    cdef double g
    for o in range(c):
        for a in range(m):
            db[o] += dpre[o, a]
        for a in range(m):
            for bb in range(m):
                g = dpre[o, a] + dpre[o, bb]
                dw[o, a, bb] = g * m_sum[a, bb]
                dm[a, bb] += g * w[o, a, bb]
    return dw, db, dm
