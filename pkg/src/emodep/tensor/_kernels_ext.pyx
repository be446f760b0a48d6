# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recurrent kernels; same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, tanhf
from cython cimport floating
from scipy.linalg.cython_blas cimport sgemm, dgemm

cnp.import_array()

BACKEND = "cython"


cdef inline floating _tanh(floating x) noexcept nogil:
    if floating is float:
        return tanhf(x)
    else:
        return tanh(x)


cdef inline floating _sig(floating x) noexcept nogil:
    return 0.5 * (_tanh(0.5 * x) + 1.0)


cdef void _gemm_nn(floating[:, ::1] a, floating[:, ::1] b, floating[:, ::1] c,
                   floating beta) noexcept nogil:
    # c = a @ b + beta * c, all row-major
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef floating alpha = 1.0
    cdef char tr = b'N'
    if m == 0 or n == 0 or k == 0:
        return
    if floating is float:
        sgemm(&tr, &tr, &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &k, &beta, &c[0, 0], &n)
    else:
        dgemm(&tr, &tr, &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &k, &beta, &c[0, 0], &n)


cdef void _gemm_nt(floating[:, ::1] a, floating[:, ::1] b, floating[:, ::1] c,
                   floating beta) noexcept nogil:
    # c = a @ b.T + beta * c
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[0]
    cdef floating alpha = 1.0
    cdef char tn = b'N'
    cdef char tt = b'T'
    if m == 0 or n == 0 or k == 0:
        return
    if floating is float:
        sgemm(&tt, &tn, &n, &m, &k, &alpha, &b[0, 0], &k, &a[0, 0], &k, &beta, &c[0, 0], &n)
    else:
        dgemm(&tt, &tn, &n, &m, &k, &alpha, &b[0, 0], &k, &a[0, 0], &k, &beta, &c[0, 0], &n)


cdef void _gemm_tn(floating[:, ::1] a, floating[:, ::1] b, floating[:, ::1] c,
                   floating beta) noexcept nogil:
    # c = a.T @ b + beta * c
    cdef int k = a.shape[0], m = a.shape[1], n = b.shape[1]
    cdef floating alpha = 1.0
    cdef char tn = b'N'
    cdef char tt = b'T'
    if m == 0 or n == 0 or k == 0:
        return
    if floating is float:
        sgemm(&tn, &tt, &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &m, &beta, &c[0, 0], &n)
    else:
        dgemm(&tn, &tt, &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &m, &beta, &c[0, 0], &n)


cdef _buf(a, dtype=None):
    # typed memoryviews need C-contiguous, writable buffers
    return np.require(a, dtype=dtype, requirements=("C", "W"))


def step_index(lengths, steps, reverse):
    lengths = np.asarray(lengths, dtype=np.int64)
    t = np.arange(steps)[:, None]
    if not reverse:
        return _buf(np.broadcast_to(t, (steps, lengths.size)))
    rev = lengths[None, :] - 1 - t
    return _buf(np.where(rev >= 0, rev, t))


cdef void _lstm_fwd(floating[:, :, ::1] xp, floating[:, ::1] w, long long[:, ::1] idx,
                    long long[::1] lengths, floating[:, ::1] h, floating[:, ::1] c,
                    floating[:, ::1] z, floating[:, :, ::1] h_prev, floating[:, :, ::1] c_prev,
                    floating[:, :, ::1] gates, floating[:, :, ::1] tanh_c) noexcept nogil:
    cdef Py_ssize_t b = xp.shape[0], s = xp.shape[1], hd = w.shape[0]
    cdef Py_ssize_t t, r, j
    cdef floating gi, gf, gg, go, cn, tc
    for t in range(s):
        for r in range(b):
            for j in range(hd):
                h_prev[t, r, j] = h[r, j]
                c_prev[t, r, j] = c[r, j]
            for j in range(4 * hd):
                z[r, j] = xp[r, idx[t, r], j]
        _gemm_nn(h, w, z, 1.0)
        for r in range(b):
            for j in range(hd):
                gi = _sig(z[r, j])
                gf = _sig(z[r, hd + j])
                gg = _tanh(z[r, 2 * hd + j])
                go = _sig(z[r, 3 * hd + j])
                cn = gf * c[r, j] + gi * gg
                tc = _tanh(cn)
                gates[t, r, j] = gi
                gates[t, r, hd + j] = gf
                gates[t, r, 2 * hd + j] = gg
                gates[t, r, 3 * hd + j] = go
                tanh_c[t, r, j] = tc
                if t < lengths[r]:
                    c[r, j] = cn
                    h[r, j] = go * tc


def lstm_forward(xp, w_hh, lengths, reverse=False):
    xp = _buf(xp)
    w_hh = _buf(w_hh, xp.dtype)
    cdef Py_ssize_t b = xp.shape[0], s = xp.shape[1], hd = xp.shape[2] // 4
    lens = _buf(lengths, np.int64)
    idx = step_index(lens, s, reverse)
    dt = xp.dtype
    h = np.zeros((b, hd), dtype=dt)
    c = np.zeros((b, hd), dtype=dt)
    z = np.empty((b, 4 * hd), dtype=dt)
    h_prev = np.empty((s, b, hd), dtype=dt)
    c_prev = np.empty((s, b, hd), dtype=dt)
    gates = np.empty((s, b, 4 * hd), dtype=dt)
    tanh_c = np.empty((s, b, hd), dtype=dt)
    if dt == np.float32:
        _lstm_fwd[float](xp, w_hh, idx, lens, h, c, z, h_prev, c_prev, gates, tanh_c)
    else:
        _lstm_fwd[double](xp, w_hh, idx, lens, h, c, z, h_prev, c_prev, gates, tanh_c)
    return h, (idx, lens, h_prev, c_prev, gates, tanh_c)


cdef void _lstm_bwd(floating[:, ::1] w, long long[:, ::1] idx, long long[::1] lengths,
                    floating[:, :, ::1] h_prev, floating[:, :, ::1] c_prev,
                    floating[:, :, ::1] gates, floating[:, :, ::1] tanh_c,
                    floating[:, ::1] dh, floating[:, ::1] dc, floating[:, ::1] dz,
                    floating[:, ::1] dh_next, floating[:, :, ::1] dxp,
                    floating[:, ::1] dw) noexcept nogil:
    cdef Py_ssize_t s = h_prev.shape[0], b = h_prev.shape[1], hd = h_prev.shape[2]
    cdef Py_ssize_t t, r, j, ti
    cdef floating gi, gf, gg, go, tc, dhn, dcn
    cdef bint valid
    for t in range(s - 1, -1, -1):
        for r in range(b):
            valid = t < lengths[r]
            for j in range(hd):
                gi = gates[t, r, j]
                gf = gates[t, r, hd + j]
                gg = gates[t, r, 2 * hd + j]
                go = gates[t, r, 3 * hd + j]
                tc = tanh_c[t, r, j]
                if valid:
                    dhn = dh[r, j]
                    dcn = dc[r, j] + dhn * go * (1.0 - tc * tc)
                    dz[r, j] = dcn * gg * gi * (1.0 - gi)
                    dz[r, hd + j] = dcn * c_prev[t, r, j] * gf * (1.0 - gf)
                    dz[r, 2 * hd + j] = dcn * gi * (1.0 - gg * gg)
                    dz[r, 3 * hd + j] = dhn * tc * go * (1.0 - go)
                    dc[r, j] = dcn * gf
                    dh_next[r, j] = 0.0
                else:
                    dz[r, j] = 0.0
                    dz[r, hd + j] = 0.0
                    dz[r, 2 * hd + j] = 0.0
                    dz[r, 3 * hd + j] = 0.0
                    dh_next[r, j] = dh[r, j]
            if valid:
                ti = idx[t, r]
                for j in range(4 * hd):
                    dxp[r, ti, j] += dz[r, j]
        _gemm_tn(h_prev[t], dz, dw, 1.0)
        _gemm_nt(dz, w, dh_next, 1.0)
        for r in range(b):
            for j in range(hd):
                dh[r, j] = dh_next[r, j]


def lstm_backward(cache, w_hh, dh_final):
    idx, lens, h_prev, c_prev, gates, tanh_c = cache
    dt = h_prev.dtype
    w_hh = _buf(w_hh, dt)
    cdef Py_ssize_t s = h_prev.shape[0], b = h_prev.shape[1], hd = h_prev.shape[2]
    dh = np.array(dh_final, dtype=dt, order="C", copy=True)
    dc = np.zeros((b, hd), dtype=dt)
    dz = np.empty((b, 4 * hd), dtype=dt)
    dh_next = np.empty((b, hd), dtype=dt)
    dxp = np.zeros((b, s, 4 * hd), dtype=dt)
    dw = np.zeros((hd, 4 * hd), dtype=dt)
    if dt == np.float32:
        _lstm_bwd[float](w_hh, idx, lens, h_prev, c_prev, gates, tanh_c, dh, dc, dz, dh_next, dxp, dw)
    else:
        _lstm_bwd[double](w_hh, idx, lens, h_prev, c_prev, gates, tanh_c, dh, dc, dz, dh_next, dxp, dw)
    return dxp, dw


cdef void _gru_fwd(floating[:, :, ::1] xp, floating[:, ::1] w, long long[:, ::1] idx,
                   long long[::1] lengths, floating[:, ::1] h, floating[:, ::1] hr,
                   floating[:, :, ::1] h_prev, floating[:, :, ::1] gates,
                   floating[:, :, ::1] hn) noexcept nogil:
    cdef Py_ssize_t b = xp.shape[0], s = xp.shape[1], hd = w.shape[0]
    cdef Py_ssize_t t, r, j, ti
    cdef floating gr, gz, gn
    for t in range(s):
        for r in range(b):
            for j in range(hd):
                h_prev[t, r, j] = h[r, j]
        _gemm_nn(h, w, hr, 0.0)
        for r in range(b):
            ti = idx[t, r]
            for j in range(hd):
                gr = _sig(xp[r, ti, j] + hr[r, j])
                gz = _sig(xp[r, ti, hd + j] + hr[r, hd + j])
                gn = _tanh(xp[r, ti, 2 * hd + j] + gr * hr[r, 2 * hd + j])
                gates[t, r, j] = gr
                gates[t, r, hd + j] = gz
                gates[t, r, 2 * hd + j] = gn
                hn[t, r, j] = hr[r, 2 * hd + j]
                if t < lengths[r]:
                    h[r, j] = (1.0 - gz) * gn + gz * h[r, j]


def gru_forward(xp, w_hh, lengths, reverse=False):
    xp = _buf(xp)
    w_hh = _buf(w_hh, xp.dtype)
    cdef Py_ssize_t b = xp.shape[0], s = xp.shape[1], hd = xp.shape[2] // 3
    lens = _buf(lengths, np.int64)
    idx = step_index(lens, s, reverse)
    dt = xp.dtype
    h = np.zeros((b, hd), dtype=dt)
    hr = np.empty((b, 3 * hd), dtype=dt)
    h_prev = np.empty((s, b, hd), dtype=dt)
    gates = np.empty((s, b, 3 * hd), dtype=dt)
    hn = np.empty((s, b, hd), dtype=dt)
    if dt == np.float32:
        _gru_fwd[float](xp, w_hh, idx, lens, h, hr, h_prev, gates, hn)
    else:
        _gru_fwd[double](xp, w_hh, idx, lens, h, hr, h_prev, gates, hn)
    return h, (idx, lens, h_prev, gates, hn)


cdef void _gru_bwd(floating[:, ::1] w, long long[:, ::1] idx, long long[::1] lengths,
                   floating[:, :, ::1] h_prev, floating[:, :, ::1] gates,
                   floating[:, :, ::1] hn, floating[:, ::1] dh, floating[:, ::1] dhr,
                   floating[:, ::1] dh_next, floating[:, :, ::1] dxp,
                   floating[:, ::1] dw) noexcept nogil:
    cdef Py_ssize_t s = h_prev.shape[0], b = h_prev.shape[1], hd = h_prev.shape[2]
    cdef Py_ssize_t t, r, j, ti
    cdef floating gr, gz, gn, dhn, dan, dar, daz
    cdef bint valid
    for t in range(s - 1, -1, -1):
        for r in range(b):
            valid = t < lengths[r]
            ti = idx[t, r]
            for j in range(hd):
                if valid:
                    gr = gates[t, r, j]
                    gz = gates[t, r, hd + j]
                    gn = gates[t, r, 2 * hd + j]
                    dhn = dh[r, j]
                    dan = dhn * (1.0 - gz) * (1.0 - gn * gn)
                    dar = dan * hn[t, r, j] * gr * (1.0 - gr)
                    daz = dhn * (h_prev[t, r, j] - gn) * gz * (1.0 - gz)
                    dxp[r, ti, j] += dar
                    dxp[r, ti, hd + j] += daz
                    dxp[r, ti, 2 * hd + j] += dan
                    dhr[r, j] = dar
                    dhr[r, hd + j] = daz
                    dhr[r, 2 * hd + j] = dan * gr
                    dh_next[r, j] = dhn * gz
                else:
                    dhr[r, j] = 0.0
                    dhr[r, hd + j] = 0.0
                    dhr[r, 2 * hd + j] = 0.0
                    dh_next[r, j] = dh[r, j]
        _gemm_tn(h_prev[t], dhr, dw, 1.0)
        _gemm_nt(dhr, w, dh_next, 1.0)
        for r in range(b):
            for j in range(hd):
                dh[r, j] = dh_next[r, j]


def gru_backward(cache, w_hh, dh_final):
    idx, lens, h_prev, gates, hn = cache
    dt = h_prev.dtype
    w_hh = _buf(w_hh, dt)
    cdef Py_ssize_t s = h_prev.shape[0], b = h_prev.shape[1], hd = h_prev.shape[2]
    dh = np.array(dh_final, dtype=dt, order="C", copy=True)
    dhr = np.empty((b, 3 * hd), dtype=dt)
    dh_next = np.empty((b, hd), dtype=dt)
    dxp = np.zeros((b, s, 3 * hd), dtype=dt)
    dw = np.zeros((hd, 3 * hd), dtype=dt)
    if dt == np.float32:
        _gru_bwd[float](w_hh, idx, lens, h_prev, gates, hn, dh, dhr, dh_next, dxp, dw)
    else:
        _gru_bwd[double](w_hh, idx, lens, h_prev, gates, hn, dh, dhr, dh_next, dxp, dw)
    return dxp, dw
