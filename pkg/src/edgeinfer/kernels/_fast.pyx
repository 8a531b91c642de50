# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops (matmul, conv2d, maxpool2d).

Accumulation order and rounding mirror kernels/pure.py exactly: each output
element folds its contributions in ascending index order with one f32 multiply
and one f32 add per step. Built with -ffp-contract=off so no FMA contraction
can perturb bitwise equality with the fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def matmul(cnp.float32_t[:, ::1] a, cnp.float32_t[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[1]
    out_arr = np.zeros((m, n), dtype=np.float32)
    cdef cnp.float32_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef float acc
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc = acc + a[i, t] * b[t, j]
            out[i, j] = acc
    return out_arr


def conv2d(cnp.float32_t[:, :, :, ::1] x, cnp.float32_t[:, :, :, ::1] w,
           Py_ssize_t stride, Py_ssize_t pad):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t oc = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (wd + 2 * pad - kw) // stride + 1
    out_arr = np.zeros((n, oc, oh, ow), dtype=np.float32)
    cdef cnp.float32_t[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, o, ci, i, j, oy, ox, iy, ix
    cdef float acc, xv
    for b in range(n):
        for o in range(oc):
            for oy in range(oh):
                for ox in range(ow):
                    acc = 0.0
                    for ci in range(c):
                        for i in range(kh):
                            iy = oy * stride + i - pad
                            if iy < 0 or iy >= h:
                                continue
                            for j in range(kw):
                                ix = ox * stride + j - pad
                                if ix < 0 or ix >= wd:
                                    continue
                                acc = acc + x[b, ci, iy, ix] * w[o, ci, i, j]
                    out[b, o, oy, ox] = acc
    return out_arr


def maxpool2d(cnp.float32_t[:, :, :, ::1] x, Py_ssize_t kh, Py_ssize_t kw,
              Py_ssize_t stride, Py_ssize_t pad):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (wd + 2 * pad - kw) // stride + 1
    out_arr = np.empty((n, c, oh, ow), dtype=np.float32)
    cdef cnp.float32_t[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, ci, oy, ox, i, j, iy, ix
    cdef float m, v
    cdef float neg_inf = -np.float32(np.inf)
    for b in range(n):
        for ci in range(c):
            for oy in range(oh):
                for ox in range(ow):
                    m = neg_inf
                    for i in range(kh):
                        iy = oy * stride + i - pad
                        for j in range(kw):
                            ix = ox * stride + j - pad
                            if 0 <= iy < h and 0 <= ix < wd:
                                v = x[b, ci, iy, ix]
                            else:
                                v = neg_inf
                            # mirror np.maximum: NaN propagates, ties keep m
                            if m != m:
                                pass
                            elif v != v or v > m:
                                m = v
                    out[b, ci, oy, ox] = m
    return out_arr
