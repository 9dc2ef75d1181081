# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py`` for the contract."""

import numpy as np
from libc.math cimport INFINITY, pow, isnan

cdef enum:
    KIND_AFFINE_ = 0
    KIND_MAX_ = 1
    KIND_POWPROD_ = 2

KIND_AFFINE = KIND_AFFINE_
KIND_MAX = KIND_MAX_
KIND_POWPROD = KIND_POWPROD_


cdef inline double _combine(int kind, double p, double q, double u, double v) nogil:
    if kind == KIND_AFFINE_:
        return p * u + q * v
    if kind == KIND_MAX_:
        return u if u >= v else v
    return pow(u * v, p)


cdef inline bint _outside(double x, double lo, double hi, bint lo_closed,
                          bint hi_closed, double slack) nogil:
    if isnan(x):
        return True
    if lo_closed:
        if x < lo - slack:
            return True
    elif x <= lo - slack:
        return True
    if hi_closed:
        if x > hi + slack:
            return True
    elif x >= hi + slack:
        return True
    return False


cdef inline long long[::1] _as_prog(prog):
    return np.ascontiguousarray(prog, dtype=np.int64)


cdef inline double[::1] _as_vals(values):
    return np.ascontiguousarray(values, dtype=np.float64)


cdef int _check_kind(int kind) except -1:
    if kind < 0 or kind > 2:
        raise ValueError(f"unknown kernel kind {kind}")
    return 0


def eval_postfix(prog, values, int kind, double p, double q, double lo=0.0,
                 double hi=INFINITY, bint lo_closed=True, bint hi_closed=False,
                 bint check=False, double slack=0.0):
    _check_kind(kind)
    cdef long long[::1] pr = _as_prog(prog)
    cdef double[::1] vals = _as_vals(values)
    cdef Py_ssize_t m = pr.shape[0]
    cdef double[::1] stack = np.empty(m + 1, dtype=np.float64)
    cdef Py_ssize_t top = 0, pos, fail = -1
    cdef long long op
    cdef double x = 0.0, u, v
    if m == 0:
        raise ValueError("empty program")
    with nogil:
        for pos in range(m):
            op = pr[pos]
            if op >= 0:
                x = vals[op]
            else:
                top -= 1
                v = stack[top]
                top -= 1
                u = stack[top]
                x = _combine(kind, p, q, u, v)
            if check and _outside(x, lo, hi, lo_closed, hi_closed, slack):
                fail = pos
                break
            stack[top] = x
            top += 1
    if fail >= 0:
        return x, fail
    return stack[top - 1], -1


def eval_postfix_many(progs, values, int kind, double p, double q):
    _check_kind(kind)
    cdef long long[:, ::1] pr = np.ascontiguousarray(progs, dtype=np.int64)
    cdef double[::1] vals = _as_vals(values)
    cdef Py_ssize_t rows = pr.shape[0], m = pr.shape[1]
    cdef double[::1] out = np.empty(rows, dtype=np.float64)
    cdef double[::1] stack = np.empty(m + 1, dtype=np.float64)
    cdef Py_ssize_t r, pos, top
    cdef long long op
    cdef double u, v
    with nogil:
        for r in range(rows):
            top = 0
            for pos in range(m):
                op = pr[r, pos]
                if op >= 0:
                    stack[top] = vals[op]
                    top += 1
                else:
                    top -= 1
                    v = stack[top]
                    u = stack[top - 1]
                    stack[top - 1] = _combine(kind, p, q, u, v)
            out[r] = stack[top - 1]
    return np.asarray(out).tolist()


def eval_windows(prog, terms, Py_ssize_t start, Py_ssize_t count, int kind,
                 double p, double q):
    _check_kind(kind)
    cdef long long[::1] pr = _as_prog(prog)
    cdef double[::1] t = _as_vals(terms)
    cdef Py_ssize_t m = pr.shape[0]
    cdef double[::1] out = np.empty(count, dtype=np.float64)
    cdef double[::1] stack = np.empty(m + 1, dtype=np.float64)
    cdef Py_ssize_t k, pos, top, base
    cdef long long op
    cdef double u, v
    if count > 0 and start + count - 1 + (m + 1) // 2 > t.shape[0]:
        raise IndexError("window runs past the end of terms")
    with nogil:
        for k in range(count):
            base = start + k
            top = 0
            for pos in range(m):
                op = pr[pos]
                if op >= 0:
                    stack[top] = t[base + op]
                    top += 1
                else:
                    top -= 1
                    v = stack[top]
                    u = stack[top - 1]
                    stack[top - 1] = _combine(kind, p, q, u, v)
            out[k] = stack[top - 1]
    return np.asarray(out).tolist()


def lifo_sum(double s, terms):
    cdef double[::1] t = _as_vals(terms)
    cdef Py_ssize_t n = t.shape[0] - 1, i
    cdef double total = 0.0, w = 1.0
    for i in range(1, n + 1):
        w *= s
        total += w * t[i - 1]
    return total + w * t[n]


def fifo_sum(double s, terms):
    cdef double[::1] t = _as_vals(terms)
    cdef Py_ssize_t n = t.shape[0] - 1, i
    cdef double total = 0.0, w = 1.0
    for i in range(1, n + 1):
        w *= s
        total += w * t[n - i + 1]
    return w * t[0] + total


cdef inline int _bit_length(unsigned long long x) nogil:
    cdef int b = 0
    while x:
        x >>= 1
        b += 1
    return b


def binary_split_seq(long long n):
    cdef list n_seq = [0]
    cdef list l_seq = []
    cdef long long nj = 0
    cdef int lj
    while n - nj >= 2:
        lj = _bit_length(<unsigned long long>(n - nj - 1))
        l_seq.append(lj)
        nj += (<long long>1) << (lj - 1)
        n_seq.append(nj)
    n_seq.append(n)
    return n_seq, l_seq


def pow2_exact_sum(double s, terms):
    cdef double[::1] t = _as_vals(terms)
    cdef long long n = t.shape[0]
    cdef long long nj = 0, nxt, i
    cdef int lj, r = 0
    cdef double total = 0.0, block
    with nogil:
        while n - nj >= 2:
            lj = _bit_length(<unsigned long long>(n - nj - 1))
            nxt = nj + ((<long long>1) << (lj - 1))
            block = 0.0
            for i in range(nj, nxt):
                block += t[i]
            total += pow(s, r + lj) * block
            nj = nxt
            r += 1
        block = 0.0
        for i in range(nj, n):
            block += t[i]
        total += pow(s, r) * block
    return total


def binary_split_mask(long long n):
    cdef long long nj = 0, mask = 1, recon = 1, step
    cdef int lj
    while n - nj >= 2:
        lj = _bit_length(<unsigned long long>(n - nj - 1))
        step = (<long long>1) << (lj - 1)
        mask |= step
        recon += step
        nj += step
    return mask, recon
