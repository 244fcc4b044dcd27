# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled forward/backward kernels for small dense nets.

Same numeric contract as the NumPy backend in pykern.py; the naive C loops
beat BLAS-dispatched NumPy at the layer sizes this engine trains (tens of
units), where per-call overhead dominates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

NAME = "cython"

LOG_CLAMP = 1e-12

cdef double _LOG_CLAMP = 1e-12


cdef void _affine(double[:, ::1] h, double[:, ::1] w, double[::1] b,
                  double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = h.shape[0], din = h.shape[1], dout = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(dout):
            acc = b[j]
            for k in range(din):
                acc += h[i, k] * w[k, j]
            out[i, j] = acc


cdef void _relu_inplace(double[:, ::1] z) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            if z[i, j] < 0.0:
                z[i, j] = 0.0


cdef void _softmax_rows(double[:, ::1] logits, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = logits.shape[0], k = logits.shape[1]
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(n):
        m = logits[i, 0]
        for j in range(1, k):
            if logits[i, j] > m:
                m = logits[i, j]
        s = 0.0
        for j in range(k):
            out[i, j] = exp(logits[i, j] - m)
            s += out[i, j]
        for j in range(k):
            out[i, j] /= s


def forward(list weights, list biases, double[:, ::1] x):
    """Class probabilities for a batch, shape (n, K)."""
    cdef Py_ssize_t last = len(weights) - 1
    cdef Py_ssize_t i
    cdef cnp.ndarray cur = np.asarray(x)
    cdef cnp.ndarray nxt
    cdef double[:, ::1] hv, zv, wv
    cdef double[::1] bv
    for i in range(len(weights)):
        wv = weights[i]
        bv = biases[i]
        nxt = np.empty((cur.shape[0], wv.shape[1]), dtype=np.float64)
        hv = cur
        zv = nxt
        _affine(hv, wv, bv, zv)
        if i < last:
            _relu_inplace(zv)
        cur = nxt
    probs = np.empty_like(cur)
    _softmax_rows(cur, probs)
    return probs


def backward(list weights, list biases, double[:, ::1] x, double[:, ::1] targets):
    """Mean cross-entropy loss and its gradients for a batch of soft targets."""
    cdef Py_ssize_t nlayers = len(weights)
    cdef Py_ssize_t last = nlayers - 1
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, k, l
    cdef double[:, ::1] wv, zv, hv, dv, dprev, gwv, prev_z
    cdef double[::1] bv, gbv
    cdef double acc, loss_acc, p

    acts = [np.asarray(x)]          # post-activation per layer, acts[0] = input
    pre = []                        # pre-activation per layer
    cdef cnp.ndarray cur = np.asarray(x)
    cdef cnp.ndarray nxt
    for l in range(nlayers):
        wv = weights[l]
        bv = biases[l]
        nxt = np.empty((cur.shape[0], wv.shape[1]), dtype=np.float64)
        _affine(cur, wv, bv, nxt)
        pre.append(nxt)
        if l < last:
            nxt = nxt.copy()
            _relu_inplace(nxt)
        cur = nxt
        acts.append(cur)

    probs = np.empty_like(pre[last])
    _softmax_rows(pre[last], probs)

    cdef double[:, ::1] pv = probs
    cdef double[:, ::1] tv = targets
    loss_acc = 0.0
    with nogil:
        for i in range(n):
            for j in range(pv.shape[1]):
                p = pv[i, j]
                if p < _LOG_CLAMP:
                    p = _LOG_CLAMP
                loss_acc -= tv[i, j] * log(p)
    cdef double loss = loss_acc / n

    delta = np.empty_like(probs)
    dv = delta
    with nogil:
        for i in range(n):
            for j in range(dv.shape[1]):
                dv[i, j] = (pv[i, j] - tv[i, j]) / n

    grad_w = [None] * nlayers
    grad_b = [None] * nlayers
    cdef cnp.ndarray gw, gb, nd
    for l in range(last, -1, -1):
        hv = acts[l]
        dv = delta
        gw = np.empty((hv.shape[1], dv.shape[1]), dtype=np.float64)
        gb = np.empty(dv.shape[1], dtype=np.float64)
        gwv = gw
        gbv = gb
        with nogil:
            for j in range(gwv.shape[0]):
                for k in range(gwv.shape[1]):
                    acc = 0.0
                    for i in range(n):
                        acc += hv[i, j] * dv[i, k]
                    gwv[j, k] = acc
            for k in range(gbv.shape[0]):
                acc = 0.0
                for i in range(n):
                    acc += dv[i, k]
                gbv[k] = acc
        grad_w[l] = gw
        grad_b[l] = gb
        if l > 0:
            wv = weights[l]
            prev_z = pre[l - 1]
            nd = np.empty((n, wv.shape[0]), dtype=np.float64)
            dprev = nd
            with nogil:
                for i in range(n):
                    for j in range(dprev.shape[1]):
                        if prev_z[i, j] > 0.0:
                            acc = 0.0
                            for k in range(dv.shape[1]):
                                acc += dv[i, k] * wv[j, k]
                            dprev[i, j] = acc
                        else:
                            dprev[i, j] = 0.0
            delta = nd
    return loss, grad_w, grad_b
