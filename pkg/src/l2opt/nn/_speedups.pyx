# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: dense-network forward/backward and a fused Adam update.

BLAS (dgemm) performs the matrix products; bias addition, activations and
their derivatives run as fused loops.  Semantics mirror l2opt.nn.engine up to
floating-point summation order.  Activation codes follow
l2opt.nn.activations.KIND_CODES: 0 linear, 1 relu, 2 leaky_relu, 3 elu,
4 sigmoid, 5 tanh; the per-layer parameter is the leak (2) or alpha (3).
"""
import numpy as np

from libc.math cimport exp, expm1, sqrt, tanh as ctanh
from scipy.linalg.cython_blas cimport dgemm


cdef inline double act_val(long code, double p, double z) nogil:
    cdef double e
    if code == 0:
        return z
    if code == 1:
        return z if z > 0.0 else 0.0
    if code == 2:
        return z if z > 0.0 else p * z
    if code == 3:
        return z if z > 0.0 else p * expm1(z)
    if code == 4:
        if z >= 0.0:
            return 1.0 / (1.0 + exp(-z))
        e = exp(z)
        return e / (1.0 + e)
    return ctanh(z)


cdef inline double act_grad(long code, double p, double z) nogil:
    cdef double s
    if code == 0:
        return 1.0
    if code == 1:
        return 1.0 if z > 0.0 else 0.0
    if code == 2:
        return 1.0 if z > 0.0 else p
    if code == 3:
        return 1.0 if z > 0.0 else p * exp(z)
    if code == 4:
        if z >= 0.0:
            s = 1.0 / (1.0 + exp(-z))
        else:
            s = exp(z)
            s = s / (1.0 + s)
        return s * (1.0 - s)
    s = ctanh(z)
    return 1.0 - s * s


cdef double _ONE = 1.0
cdef double _ZERO = 0.0


cdef void gemm_ab(double[:, ::1] A, double[:, ::1] B, double[:, ::1] C) nogil:
    # C(m,n) = A(m,k) @ B(k,n), all C-contiguous.
    cdef char tn = b'N'
    cdef int m = B.shape[1], n = A.shape[0], k = A.shape[1]
    dgemm(&tn, &tn, &m, &n, &k, &_ONE, &B[0, 0], &m, &A[0, 0], &k, &_ZERO, &C[0, 0], &m)


cdef void gemm_abt(double[:, ::1] A, double[:, ::1] B, double[:, ::1] C) nogil:
    # C(m,n) = A(m,k) @ B(n,k)^T
    cdef char tt = b'T', tn = b'N'
    cdef int m = B.shape[0], n = A.shape[0], k = A.shape[1]
    dgemm(&tt, &tn, &m, &n, &k, &_ONE, &B[0, 0], &k, &A[0, 0], &k, &_ZERO, &C[0, 0], &m)


cdef void gemm_atb(double[:, ::1] A, double[:, ::1] B, double[:, ::1] C) nogil:
    # C(k,n) = A(m,k)^T @ B(m,n)
    cdef char tn = b'N', tt = b'T'
    cdef int m = B.shape[1], n = A.shape[1], k = A.shape[0]
    dgemm(&tn, &tt, &m, &n, &k, &_ONE, &B[0, 0], &m, &A[0, 0], &n, &_ZERO, &C[0, 0], &m)


def net_forward(list Ws, list bs, long[::1] codes, double[::1] params,
                double[:, ::1] X, bint need_cache):
    """Forward pass; returns (output, z_list, activation_list).

    The cache lists are None unless requested; activation_list[-1] is the
    output array itself.
    """
    cdef Py_ssize_t n_layers = len(Ws)
    cdef Py_ssize_t batch = X.shape[0]
    cdef Py_ssize_t l, i, j, width
    cdef double[:, ::1] wv, zv, av, prev
    cdef double[::1] bv
    cdef long code
    cdef double par, z
    zs = []
    acts = []
    prev = X
    for l in range(n_layers):
        wv = Ws[l]
        bv = bs[l]
        width = wv.shape[1]
        z_arr = np.empty((batch, width))
        a_arr = np.empty((batch, width))
        zv = z_arr
        av = a_arr
        gemm_ab(prev, wv, zv)
        code = codes[l]
        par = params[l]
        with nogil:
            for i in range(batch):
                for j in range(width):
                    z = zv[i, j] + bv[j]
                    zv[i, j] = z
                    av[i, j] = act_val(code, par, z)
        zs.append(z_arr)
        acts.append(a_arr)
        prev = av
    if need_cache:
        return acts[n_layers - 1], zs, acts
    return acts[n_layers - 1], None, None


def net_backward(list Ws, long[::1] codes, double[::1] params,
                 double[:, ::1] X0, list zs, list acts, double[:, ::1] d_out):
    """Backward pass from dL/d(output); returns [dW0, db0, dW1, db1, ...].

    Any 1/batch factor must already be inside d_out.
    """
    cdef Py_ssize_t n_layers = len(Ws)
    cdef Py_ssize_t batch = X0.shape[0]
    cdef Py_ssize_t l, i, j, n_in, n_out
    cdef double[:, ::1] wv, zv, prev, delta, d_prev, dwv
    cdef double[::1] dbv
    cdef long code
    cdef double par, acc
    grads = [None] * (2 * n_layers)

    zv = zs[n_layers - 1]
    n_out = zv.shape[1]
    delta_arr = np.empty((batch, n_out))
    delta = delta_arr
    code = codes[n_layers - 1]
    par = params[n_layers - 1]
    with nogil:
        for i in range(batch):
            for j in range(n_out):
                delta[i, j] = d_out[i, j] * act_grad(code, par, zv[i, j])

    for l in range(n_layers - 1, -1, -1):
        wv = Ws[l]
        n_in = wv.shape[0]
        n_out = wv.shape[1]
        if l == 0:
            prev = X0
        else:
            prev = acts[l - 1]
        dw_arr = np.empty((n_in, n_out))
        db_arr = np.empty(n_out)
        dwv = dw_arr
        dbv = db_arr
        gemm_atb(prev, delta, dwv)
        with nogil:
            for j in range(n_out):
                acc = 0.0
                for i in range(batch):
                    acc += delta[i, j]
                dbv[j] = acc
        grads[2 * l] = dw_arr
        grads[2 * l + 1] = db_arr
        if l > 0:
            d_prev_arr = np.empty((batch, n_in))
            d_prev = d_prev_arr
            gemm_abt(delta, wv, d_prev)
            zv = zs[l - 1]
            code = codes[l - 1]
            par = params[l - 1]
            with nogil:
                for i in range(batch):
                    for j in range(n_in):
                        d_prev[i, j] *= act_grad(code, par, zv[i, j])
            delta = d_prev
    return grads


def adam_step(double[::1] param, double[::1] grad,
              double[::1] s, double[::1] r,
              double bc1, double bc2, double alpha, double beta,
              double rho1, double rho2):
    """Fused Adam update on raveled views; bc1/bc2 are the bias corrections."""
    cdef Py_ssize_t i, n = param.shape[0]
    cdef double g
    with nogil:
        for i in range(n):
            g = grad[i]
            s[i] = rho1 * s[i] + (1.0 - rho1) * g
            r[i] = rho2 * r[i] + (1.0 - rho2) * g * g
            param[i] -= alpha * (s[i] / bc1) / (beta + sqrt(r[i] / bc2))
