# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: matching matrix, binning, forward and per-triple backprop.

Mirrors ``anmm._pykernels`` function for function.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, floor
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double ez
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    ez = exp(z)
    return ez / (1.0 + ez)


cdef int _cmp_double(const void *a, const void *b) noexcept nogil:
    cdef double x = (<const double *>a)[0]
    cdef double y = (<const double *>b)[0]
    return (x > y) - (x < y)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    flat = np.ascontiguousarray(z).ravel()
    out = np.empty_like(flat)
    cdef double[::1] zi = flat
    cdef double[::1] zo = out
    cdef Py_ssize_t i
    for i in range(zi.shape[0]):
        zo[i] = _sigmoid(zi[i])
    return out.reshape(z.shape)


cdef void _softmax(const double[:, ::1] Q, const double[::1] v, double *g) noexcept nogil:
    cdef Py_ssize_t m = Q.shape[0], d = Q.shape[1], j, p
    cdef double s, mx = 0.0, tot = 0.0
    for j in range(m):
        s = 0.0
        for p in range(d):
            s += Q[j, p] * v[p]
        g[j] = s
        if j == 0 or s > mx:
            mx = s
    for j in range(m):
        g[j] = exp(g[j] - mx)
        tot += g[j]
    for j in range(m):
        g[j] /= tot


def softmax(logits):
    x = np.ascontiguousarray(logits, dtype=np.float64)
    cdef double[::1] z = x
    out = np.empty_like(x)
    cdef double[::1] o = out
    cdef Py_ssize_t j, m = z.shape[0]
    cdef double mx = z[0], tot = 0.0
    for j in range(m):
        if z[j] > mx:
            mx = z[j]
    for j in range(m):
        o[j] = exp(z[j] - mx)
        tot += o[j]
    for j in range(m):
        o[j] /= tot
    return out


def match_matrix(const double[:, ::1] Q, const double[:, ::1] A,
                 const cnp.int64_t[::1] qids, const cnp.int64_t[::1] aids):
    cdef Py_ssize_t m = Q.shape[0], n = A.shape[0], d = Q.shape[1], j, i, p
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] P = out
    cdef double s
    with nogil:
        for j in range(m):
            for i in range(n):
                if qids[j] == aids[i]:
                    P[j, i] = 1.0
                    continue
                s = 0.0
                for p in range(d):
                    s += Q[j, p] * A[i, p]
                if s > 1.0:
                    s = 1.0
                elif s < -1.0:
                    s = -1.0
                P[j, i] = s
    return out


def bin_rows(P_in, Py_ssize_t bin_count, double lo):
    P_arr = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef const double[:, ::1] P = P_arr
    cdef Py_ssize_t m = P.shape[0], n = P.shape[1], j, i, k
    cdef Py_ssize_t regular = bin_count - 1
    cdef double val
    out = np.zeros((m, bin_count), dtype=np.float64)
    cdef double[:, ::1] X = out
    cdef double *row = <double *>malloc(n * sizeof(double))
    if row == NULL:
        raise MemoryError()
    try:
        with nogil:
            for j in range(m):
                for i in range(n):
                    row[i] = P[j, i]
                qsort(row, n, sizeof(double), _cmp_double)
                for i in range(n):
                    val = row[i]
                    if val < lo:
                        continue
                    if val == 1.0:
                        k = regular
                    else:
                        k = <Py_ssize_t>floor((val - lo) * regular / (1.0 - lo))
                        if k < 0:
                            k = 0
                        elif k > regular - 1:
                            k = regular - 1
                    X[j, k] += val
    finally:
        free(row)
    return out


def anmm1_forward(const double[:, ::1] X, const double[::1] g, const double[::1] w):
    cdef Py_ssize_t m = X.shape[0], B = X.shape[1], j, k
    cdef double u, y = 0.0
    for j in range(m):
        u = 0.0
        for k in range(B):
            u += X[j, k] * w[k]
        y += g[j] * _sigmoid(u)
    return y


def anmm2_forward(const double[:, ::1] X, const double[::1] g,
                  const double[:, ::1] W, const double[::1] r):
    cdef Py_ssize_t m = X.shape[0], B = X.shape[1], T = W.shape[1], j, k, t
    cdef double u, up, y = 0.0
    for j in range(m):
        up = 0.0
        for t in range(T):
            u = 0.0
            for k in range(B):
                u += X[j, k] * W[k, t]
            up += r[t] * _sigmoid(u)
        y += g[j] * _sigmoid(up)
    return y


def anmm1_triple(const double[:, ::1] Xp, const double[:, ::1] Xn,
                 const double[:, ::1] Q, const double[::1] w, const double[::1] v,
                 double[::1] dw, double[::1] dv):
    cdef Py_ssize_t m = Xp.shape[0], B = Xp.shape[1], d = Q.shape[1], j, k, p
    cdef double *buf = <double *>malloc((4 * m + d) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *g = buf
    cdef double *hp = buf + m
    cdef double *hn = buf + 2 * m
    cdef double *diff = buf + 3 * m
    cdef double *qbar = buf + 4 * m
    cdef double u, yp = 0.0, yn = 0.0, loss, cp, cn
    try:
        with nogil:
            _softmax(Q, v, g)
            for j in range(m):
                u = 0.0
                for k in range(B):
                    u += Xp[j, k] * w[k]
                hp[j] = _sigmoid(u)
                u = 0.0
                for k in range(B):
                    u += Xn[j, k] * w[k]
                hn[j] = _sigmoid(u)
                yp += g[j] * hp[j]
                yn += g[j] * hn[j]
            loss = 1.0 - yp + yn
            if loss <= 0.0:
                loss = 0.0
            else:
                for p in range(d):
                    qbar[p] = 0.0
                for j in range(m):
                    for p in range(d):
                        qbar[p] += g[j] * Q[j, p]
                for j in range(m):
                    diff[j] = g[j] * (hn[j] - hp[j])
                    for p in range(d):
                        dv[p] += diff[j] * (Q[j, p] - qbar[p])
                for j in range(m):
                    cp = g[j] * hp[j] * (1.0 - hp[j])
                    cn = g[j] * hn[j] * (1.0 - hn[j])
                    for k in range(B):
                        dw[k] += cn * Xn[j, k] - cp * Xp[j, k]
    finally:
        free(buf)
    return loss


def anmm2_triple(const double[:, ::1] Xp, const double[:, ::1] Xn,
                 const double[:, ::1] Q, const double[:, ::1] W, const double[::1] r,
                 const double[::1] v, double[:, ::1] dW, double[::1] dr, double[::1] dv):
    cdef Py_ssize_t m = Xp.shape[0], B = Xp.shape[1], T = W.shape[1], d = Q.shape[1]
    cdef Py_ssize_t j, k, t, p
    cdef double *buf = <double *>malloc((3 * m + d + 2 * m * T + 2 * T) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *g = buf
    cdef double *hp = buf + m
    cdef double *hn = buf + 2 * m
    cdef double *qbar = buf + 3 * m
    cdef double *Sp = qbar + d
    cdef double *Sn = Sp + m * T
    cdef double *gp = Sn + m * T
    cdef double *gn = gp + T
    cdef double u, up, un, yp = 0.0, yn = 0.0, loss, cp, cn, diff
    try:
        with nogil:
            _softmax(Q, v, g)
            for j in range(m):
                up = 0.0
                un = 0.0
                for t in range(T):
                    u = 0.0
                    for k in range(B):
                        u += Xp[j, k] * W[k, t]
                    Sp[j * T + t] = _sigmoid(u)
                    up += r[t] * Sp[j * T + t]
                    u = 0.0
                    for k in range(B):
                        u += Xn[j, k] * W[k, t]
                    Sn[j * T + t] = _sigmoid(u)
                    un += r[t] * Sn[j * T + t]
                hp[j] = _sigmoid(up)
                hn[j] = _sigmoid(un)
                yp += g[j] * hp[j]
                yn += g[j] * hn[j]
            loss = 1.0 - yp + yn
            if loss <= 0.0:
                loss = 0.0
            else:
                for p in range(d):
                    qbar[p] = 0.0
                for j in range(m):
                    for p in range(d):
                        qbar[p] += g[j] * Q[j, p]
                for j in range(m):
                    diff = g[j] * (hn[j] - hp[j])
                    for p in range(d):
                        dv[p] += diff * (Q[j, p] - qbar[p])
                    cp = g[j] * hp[j] * (1.0 - hp[j])
                    cn = g[j] * hn[j] * (1.0 - hn[j])
                    for t in range(T):
                        dr[t] += cn * Sn[j * T + t] - cp * Sp[j * T + t]
                        gp[t] = cp * r[t] * Sp[j * T + t] * (1.0 - Sp[j * T + t])
                        gn[t] = cn * r[t] * Sn[j * T + t] * (1.0 - Sn[j * T + t])
                    for k in range(B):
                        for t in range(T):
                            dW[k, t] += gn[t] * Xn[j, k] - gp[t] * Xp[j, k]
    finally:
        free(buf)
    return loss
