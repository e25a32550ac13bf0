# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: single-state MLP forward and fused adaptive-moment
parameter updates. These run once per environment step in the training loop,
where Python/numpy dispatch overhead dominates for small matrices. Batch
matrix products stay on BLAS-backed numpy in both backends.
"""

from libc.math cimport sqrt, pow

import numpy as np
cimport numpy as cnp

cnp.import_array()

COMPILED = True


def forward_single(list weights, list biases, cnp.ndarray[cnp.float64_t, ndim=1] x):
    """Forward pass for one input vector: rectifier hidden layers, linear output."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = x
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out
    cdef cnp.ndarray[cnp.float64_t, ndim=2] W
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b
    cdef Py_ssize_t layer, i, j, n_out, n_in
    cdef int last = len(weights) - 1
    cdef double acc, a0, a1, a2, a3
    for layer in range(len(weights)):
        W = weights[layer]
        b = biases[layer]
        n_out = W.shape[0]
        n_in = W.shape[1]
        out = np.empty(n_out, dtype=np.float64)
        for i in range(n_out):
            # Four independent accumulators so the compiler can vectorize the
            # dot product without reassociating a single summation chain.
            a0 = a1 = a2 = a3 = 0.0
            j = 0
            while j + 4 <= n_in:
                a0 += W[i, j] * h[j]
                a1 += W[i, j + 1] * h[j + 1]
                a2 += W[i, j + 2] * h[j + 2]
                a3 += W[i, j + 3] * h[j + 3]
                j += 4
            acc = b[i] + (a0 + a1) + (a2 + a3)
            while j < n_in:
                acc += W[i, j] * h[j]
                j += 1
            if layer != last and acc < 0.0:
                acc = 0.0
            out[i] = acc
        h = out
    return h


def adam_step(cnp.ndarray[cnp.float64_t, ndim=1] param,
              cnp.ndarray[cnp.float64_t, ndim=1] grad,
              cnp.ndarray[cnp.float64_t, ndim=1] m,
              cnp.ndarray[cnp.float64_t, ndim=1] v,
              long step, double lr, double beta1, double beta2, double eps):
    """One fused adaptive-moment update, in place on param/m/v (flat views)."""
    cdef Py_ssize_t i, n = param.shape[0]
    cdef double g, mhat, vhat
    cdef double c1 = 1.0 - pow(beta1, step)
    cdef double c2 = 1.0 - pow(beta2, step)
    for i in range(n):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        mhat = m[i] / c1
        vhat = v[i] / c2
        param[i] -= lr * mhat / (sqrt(vhat) + eps)
