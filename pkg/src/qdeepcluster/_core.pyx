# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``_fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()


def anneal_probabilities(distances, double t_anneal, int steps):
    cdef double[:, ::1] d = np.ascontiguousarray(distances, dtype=np.float64)
    cdef Py_ssize_t n_batch = d.shape[0], k = d.shape[1]
    out = np.empty((n_batch, k), dtype=np.float64)
    cdef double[:, ::1] probs = out
    bufs = np.empty((4, k), dtype=np.float64)
    cdef double[::1] re = bufs[0]
    cdef double[::1] im = bufs[1]
    cdef double[::1] hc = bufs[2]
    cdef double[::1] hs = bufs[3]
    cdef double dt = t_anneal / steps
    cdef double amp = 1.0 / sqrt(<double>k)
    cdef double s, ang, tr, ti, mr, mi, pc, ps, qr, qi
    cdef Py_ssize_t b, j
    cdef int step
    for b in range(n_batch):
        for j in range(k):
            re[j] = amp
            im[j] = 0.0
        for step in range(steps):
            s = (step + 0.5) / steps
            # half-step diagonal phase, shared by both halves of the splitting
            mr = 0.0
            mi = 0.0
            for j in range(k):
                ang = -0.5 * s * dt * d[b, j]
                hc[j] = cos(ang)
                hs[j] = sin(ang)
                tr = re[j] * hc[j] - im[j] * hs[j]
                ti = re[j] * hs[j] + im[j] * hc[j]
                re[j] = tr
                im[j] = ti
                mr += tr
                mi += ti
            mr /= k
            mi /= k
            # psi <- e^{-i th} psi + (1 - e^{-i th}) mean, then the second half phase
            pc = cos((1.0 - s) * dt)
            ps = -sin((1.0 - s) * dt)
            qr = (1.0 - pc) * mr + ps * mi
            qi = (1.0 - pc) * mi - ps * mr
            for j in range(k):
                tr = pc * re[j] - ps * im[j] + qr
                ti = pc * im[j] + ps * re[j] + qi
                re[j] = tr * hc[j] - ti * hs[j]
                im[j] = tr * hs[j] + ti * hc[j]
        for j in range(k):
            probs[b, j] = re[j] * re[j] + im[j] * im[j]
    return out


cdef inline void _valid(Py_ssize_t off, Py_ssize_t n, Py_ssize_t* lo, Py_ssize_t* hi) nogil:
    # output indices r with 0 <= r + off < n
    lo[0] = -off if off < 0 else 0
    hi[0] = n - off if off > 0 else n


def conv2d_forward(x, w):
    cdef double[:, :, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t nb = xv.shape[0], nc = xv.shape[1], h = xv.shape[2], wd = xv.shape[3]
    cdef Py_ssize_t no = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    out = np.zeros((nb, no, h, wd), dtype=np.float64)
    cdef double[:, :, :, ::1] y = out
    cdef Py_ssize_t b, o, ci, r, q, i, j, r0, r1, q0, q1, di, dj
    cdef double wt
    for b in range(nb):
        for o in range(no):
            for ci in range(nc):
                for i in range(kh):
                    di = i - ph
                    _valid(di, h, &r0, &r1)
                    for j in range(kw):
                        dj = j - pw
                        _valid(dj, wd, &q0, &q1)
                        wt = wv[o, ci, i, j]
                        for r in range(r0, r1):
                            for q in range(q0, q1):
                                y[b, o, r, q] += wt * xv[b, ci, r + di, q + dj]
    return out


def conv2d_backward(x, w, grad_out):
    cdef double[:, :, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :, :, ::1] gy = np.ascontiguousarray(grad_out, dtype=np.float64)
    cdef Py_ssize_t nb = xv.shape[0], nc = xv.shape[1], h = xv.shape[2], wd = xv.shape[3]
    cdef Py_ssize_t no = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    gx_arr = np.zeros((nb, nc, h, wd), dtype=np.float64)
    gw_arr = np.zeros((no, nc, kh, kw), dtype=np.float64)
    cdef double[:, :, :, ::1] gx = gx_arr
    cdef double[:, :, :, ::1] gw = gw_arr
    cdef Py_ssize_t b, o, ci, r, q, i, j, r0, r1, q0, q1, di, dj
    cdef double wt, acc
    for b in range(nb):
        for o in range(no):
            for ci in range(nc):
                for i in range(kh):
                    di = i - ph
                    _valid(di, h, &r0, &r1)
                    for j in range(kw):
                        dj = j - pw
                        _valid(dj, wd, &q0, &q1)
                        wt = wv[o, ci, i, j]
                        acc = 0.0
                        for r in range(r0, r1):
                            for q in range(q0, q1):
                                acc += gy[b, o, r, q] * xv[b, ci, r + di, q + dj]
                                gx[b, ci, r + di, q + dj] += wt * gy[b, o, r, q]
                        gw[o, ci, i, j] += acc
    return gx_arr, gw_arr
