# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SGD epoch over a flat parameter buffer.

Mirrors ``_pykernels`` operation for operation so both produce the same bits.
"""
from libc.math cimport exp
from libc.stdlib cimport malloc, free

cdef double _LO = 5e-324
cdef double _HI = 0.99999999999999988898  # 1 - 2**-53


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double s, e
    if x >= 0.0:
        s = 1.0 / (1.0 + exp(-x))
    else:
        e = exp(x)
        s = e / (1.0 + e)
    if s >= 1.0:
        return _HI
    if s <= 0.0:
        return _LO
    return s


def sigmoid(double x):
    return _sigmoid(x)


def sgd_epoch(double[::1] params, Py_ssize_t[::1] sizes, const double[:, ::1] X,
              const double[:, ::1] Y, Py_ssize_t[::1] order, double lr):
    """One pass of per-sample SGD; updates ``params`` in place, returns mean loss."""
    cdef Py_ssize_t n_layers = sizes.shape[0] - 1
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t k = sizes[n_layers]
    cdef Py_ssize_t total_units = 0, widest = 0
    cdef Py_ssize_t l, i, j, t, s, fan_in, fan_out, w_off, a_off, a_prev_off
    cdef double acc, diff, o, d, loss_sum = 0.0
    cdef double *act
    cdef double *delta
    cdef double *delta_prev
    cdef double *tmp
    cdef Py_ssize_t *w_offsets
    cdef Py_ssize_t *a_offsets

    if n == 0:
        return 0.0
    if X.shape[1] != sizes[0]:
        raise ValueError("input width does not match first layer")
    if Y.shape[1] != k:
        raise ValueError("target width does not match last layer")

    for l in range(n_layers + 1):
        total_units += sizes[l]
        if sizes[l] > widest:
            widest = sizes[l]

    act = <double *> malloc(total_units * sizeof(double))
    delta = <double *> malloc(widest * sizeof(double))
    delta_prev = <double *> malloc(widest * sizeof(double))
    w_offsets = <Py_ssize_t *> malloc(n_layers * sizeof(Py_ssize_t))
    a_offsets = <Py_ssize_t *> malloc((n_layers + 1) * sizeof(Py_ssize_t))
    if not act or not delta or not delta_prev or not w_offsets or not a_offsets:
        free(act); free(delta); free(delta_prev); free(w_offsets); free(a_offsets)
        raise MemoryError()

    w_off = 0
    a_off = 0
    for l in range(n_layers):
        w_offsets[l] = w_off
        w_off += sizes[l + 1] * sizes[l] + sizes[l + 1]
        a_offsets[l] = a_off
        a_off += sizes[l]
    a_offsets[n_layers] = a_off

    try:
        with nogil:
            for t in range(n):
                s = order[t]
                for i in range(sizes[0]):
                    act[i] = X[s, i]

                for l in range(n_layers):
                    fan_in = sizes[l]
                    fan_out = sizes[l + 1]
                    w_off = w_offsets[l]
                    a_prev_off = a_offsets[l]
                    a_off = a_offsets[l + 1]
                    for j in range(fan_out):
                        acc = 0.0
                        for i in range(fan_in):
                            acc = acc + params[w_off + j * fan_in + i] * act[a_prev_off + i]
                        act[a_off + j] = _sigmoid(acc + params[w_off + fan_out * fan_in + j])

                a_off = a_offsets[n_layers]
                acc = 0.0
                for j in range(k):
                    diff = act[a_off + j] - Y[s, j]
                    acc = acc + diff * diff
                loss_sum = loss_sum + acc / k

                for j in range(k):
                    o = act[a_off + j]
                    delta[j] = (2.0 * (o - Y[s, j]) / k) * (o * (1.0 - o))

                for l in range(n_layers - 1, -1, -1):
                    fan_in = sizes[l]
                    fan_out = sizes[l + 1]
                    w_off = w_offsets[l]
                    a_prev_off = a_offsets[l]
                    if l > 0:
                        for i in range(fan_in):
                            acc = 0.0
                            for j in range(fan_out):
                                acc = acc + params[w_off + j * fan_in + i] * delta[j]
                            o = act[a_prev_off + i]
                            delta_prev[i] = acc * (o * (1.0 - o))
                    for j in range(fan_out):
                        d = delta[j]
                        for i in range(fan_in):
                            params[w_off + j * fan_in + i] = (
                                params[w_off + j * fan_in + i] - lr * d * act[a_prev_off + i])
                        params[w_off + fan_out * fan_in + j] = (
                            params[w_off + fan_out * fan_in + j] - lr * d)
                    tmp = delta
                    delta = delta_prev
                    delta_prev = tmp
    finally:
        free(act); free(delta); free(delta_prev); free(w_offsets); free(a_offsets)

    return loss_sum / n
