"""Autograd wrappers around the recurrent kernels."""

import numpy as np

from ..errors import ShapeError
from . import kernels
from .autograd import _make, concat


def _check(x, w_ih, w_hh, b, gates):
    if x.ndim != 3:
        raise ShapeError(f"recurrent input must be (batch, steps, features), got {x.shape}")
    d = x.shape[2]
    h = w_hh.shape[0]
    if w_ih.shape != (d, gates * h) or w_hh.shape != (h, gates * h) or b.shape != (gates * h,):
        raise ShapeError(
            f"recurrent weights {w_ih.shape}, {w_hh.shape}, {b.shape} do not fit input {x.shape} with hidden {h}"
        )


def _final_state(fwd, bwd, gates, x, w_ih, w_hh, b, lengths, reverse):
    _check(x, w_ih, w_hh, b, gates)
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.shape != (x.shape[0],) or lengths.min() < 1 or lengths.max() > x.shape[1]:
        raise ShapeError(f"lengths {lengths.tolist()} invalid for input of shape {x.shape}")
    bsz, steps, d = x.shape
    xv, wi, wh = x.data, w_ih.data, w_hh.data
    xp = (xv.reshape(-1, d) @ wi + b.data).reshape(bsz, steps, -1)
    h, cache = fwd(xp, wh, lengths, reverse)

    def backward(g):
        dxp, dwh = bwd(cache, wh, g)
        flat = dxp.reshape(-1, dxp.shape[2])
        dx = (flat @ wi.T).reshape(xv.shape)
        dwi = xv.reshape(-1, d).T @ flat
        return dx, dwi, dwh, flat.sum(axis=0)

    return _make(h, (x, w_ih, w_hh, b), backward)


def lstm_final(x, w_ih, w_hh, b, lengths, reverse=False):
    """Hidden state after the last valid step of a one-direction LSTM."""
    return _final_state(kernels.lstm_forward, kernels.lstm_backward, 4, x, w_ih, w_hh, b, lengths, reverse)


def gru_final(x, w_ih, w_hh, b, lengths, reverse=False):
    """Hidden state after the last valid step of a one-direction GRU."""
    return _final_state(kernels.gru_forward, kernels.gru_backward, 3, x, w_ih, w_hh, b, lengths, reverse)


def bidirectional_final(cell, x, fwd_params, bwd_params, lengths):
    """Concatenate the final forward state and the final backward state."""
    final = lstm_final if cell == "lstm" else gru_final
    hf = final(x, *fwd_params, lengths, reverse=False)
    hb = final(x, *bwd_params, lengths, reverse=True)
    return concat([hf, hb], axis=1)
