"""Pure-numpy recurrent kernels (reference implementation and fallback).

Both kernels run a single direction over a padded batch.  ``xp`` holds the
input projection (``x @ W_ih + b``) for every step, shape ``(B, S, G*H)``.
Steps at or beyond a row's length leave that row's state untouched, so the
returned state is the state after the last valid step.  With ``reverse`` each
row is read from its last valid step back to its first.

Gate layout: LSTM ``[i, f, g, o]``; GRU ``[r, z, n]`` with
``n = tanh(x_n + r * (h @ W_n))``.
"""

import numpy as np

BACKEND = "python"


def step_index(lengths, steps, reverse):
    """``(S, B)`` table of the time index read by each row at each step."""
    lengths = np.asarray(lengths, dtype=np.int64)
    t = np.arange(steps)[:, None]
    if not reverse:
        return np.broadcast_to(t, (steps, lengths.size)).copy()
    rev = lengths[None, :] - 1 - t
    return np.where(rev >= 0, rev, t)


def _sig(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def lstm_forward(xp, w_hh, lengths, reverse=False):
    b, s, g4 = xp.shape
    h_dim = g4 // 4
    lengths = np.asarray(lengths, dtype=np.int64)
    idx = step_index(lengths, s, reverse)
    rows = np.arange(b)
    h = np.zeros((b, h_dim), dtype=xp.dtype)
    c = np.zeros((b, h_dim), dtype=xp.dtype)
    h_prev = np.empty((s, b, h_dim), dtype=xp.dtype)
    c_prev = np.empty((s, b, h_dim), dtype=xp.dtype)
    gates = np.empty((s, b, g4), dtype=xp.dtype)
    tanh_c = np.empty((s, b, h_dim), dtype=xp.dtype)
    for t in range(s):
        h_prev[t] = h
        c_prev[t] = c
        z = xp[rows, idx[t]] + h @ w_hh
        i = _sig(z[:, :h_dim])
        f = _sig(z[:, h_dim:2 * h_dim])
        gg = np.tanh(z[:, 2 * h_dim:3 * h_dim])
        o = _sig(z[:, 3 * h_dim:])
        c_new = f * c + i * gg
        tc = np.tanh(c_new)
        h_new = o * tc
        gates[t, :, :h_dim] = i
        gates[t, :, h_dim:2 * h_dim] = f
        gates[t, :, 2 * h_dim:3 * h_dim] = gg
        gates[t, :, 3 * h_dim:] = o
        tanh_c[t] = tc
        m = (t < lengths)[:, None]
        h = np.where(m, h_new, h)
        c = np.where(m, c_new, c)
    cache = (idx, lengths, h_prev, c_prev, gates, tanh_c)
    return h, cache


def lstm_backward(cache, w_hh, dh_final):
    idx, lengths, h_prev, c_prev, gates, tanh_c = cache
    s, b, h_dim = h_prev.shape
    dtype = h_prev.dtype
    rows = np.arange(b)
    dxp = np.zeros((b, s, 4 * h_dim), dtype=dtype)
    dw = np.zeros_like(w_hh)
    dh = np.array(dh_final, dtype=dtype)
    dc = np.zeros((b, h_dim), dtype=dtype)
    for t in range(s - 1, -1, -1):
        m = (t < lengths)[:, None].astype(dtype)
        i = gates[t, :, :h_dim]
        f = gates[t, :, h_dim:2 * h_dim]
        gg = gates[t, :, 2 * h_dim:3 * h_dim]
        o = gates[t, :, 3 * h_dim:]
        tc = tanh_c[t]
        dh_new = dh * m
        dc_new = dc * m + dh_new * o * (1.0 - tc * tc)
        dz = np.empty((b, 4 * h_dim), dtype=dtype)
        dz[:, :h_dim] = dc_new * gg * i * (1.0 - i)
        dz[:, h_dim:2 * h_dim] = dc_new * c_prev[t] * f * (1.0 - f)
        dz[:, 2 * h_dim:3 * h_dim] = dc_new * i * (1.0 - gg * gg)
        dz[:, 3 * h_dim:] = dh_new * tc * o * (1.0 - o)
        dxp[rows, idx[t]] += dz
        dw += h_prev[t].T @ dz
        dh = dh * (1.0 - m) + dz @ w_hh.T
        dc = dc * (1.0 - m) + dc_new * f
    return dxp, dw


def gru_forward(xp, w_hh, lengths, reverse=False):
    b, s, g3 = xp.shape
    h_dim = g3 // 3
    lengths = np.asarray(lengths, dtype=np.int64)
    idx = step_index(lengths, s, reverse)
    rows = np.arange(b)
    h = np.zeros((b, h_dim), dtype=xp.dtype)
    h_prev = np.empty((s, b, h_dim), dtype=xp.dtype)
    gates = np.empty((s, b, g3), dtype=xp.dtype)
    hn = np.empty((s, b, h_dim), dtype=xp.dtype)
    for t in range(s):
        h_prev[t] = h
        x = xp[rows, idx[t]]
        hr = h @ w_hh
        r = _sig(x[:, :h_dim] + hr[:, :h_dim])
        z = _sig(x[:, h_dim:2 * h_dim] + hr[:, h_dim:2 * h_dim])
        n = np.tanh(x[:, 2 * h_dim:] + r * hr[:, 2 * h_dim:])
        h_new = (1.0 - z) * n + z * h
        gates[t, :, :h_dim] = r
        gates[t, :, h_dim:2 * h_dim] = z
        gates[t, :, 2 * h_dim:] = n
        hn[t] = hr[:, 2 * h_dim:]
        m = (t < lengths)[:, None]
        h = np.where(m, h_new, h)
    cache = (idx, lengths, h_prev, gates, hn)
    return h, cache


def gru_backward(cache, w_hh, dh_final):
    idx, lengths, h_prev, gates, hn = cache
    s, b, h_dim = h_prev.shape
    dtype = h_prev.dtype
    rows = np.arange(b)
    dxp = np.zeros((b, s, 3 * h_dim), dtype=dtype)
    dw = np.zeros_like(w_hh)
    dh = np.array(dh_final, dtype=dtype)
    for t in range(s - 1, -1, -1):
        m = (t < lengths)[:, None].astype(dtype)
        r = gates[t, :, :h_dim]
        z = gates[t, :, h_dim:2 * h_dim]
        n = gates[t, :, 2 * h_dim:]
        dh_new = dh * m
        dan = dh_new * (1.0 - z) * (1.0 - n * n)
        dx = np.empty((b, 3 * h_dim), dtype=dtype)
        dx[:, :h_dim] = dan * hn[t] * r * (1.0 - r)
        dx[:, h_dim:2 * h_dim] = dh_new * (h_prev[t] - n) * z * (1.0 - z)
        dx[:, 2 * h_dim:] = dan
        dhr = dx.copy()
        dhr[:, 2 * h_dim:] = dan * r
        dxp[rows, idx[t]] += dx
        dw += h_prev[t].T @ dhr
        dh = dh * (1.0 - m) + dh_new * z + dhr @ w_hh.T
    return dxp, dw
