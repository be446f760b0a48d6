import numpy as np
import pytest

from emodep.tensor import kernels
from emodep.tensor.kernels import python_backend as py

compiled = kernels.compiled_backend
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _inputs(cell, dtype, seed=0, batch=4, steps=7, hidden=5):
    rng = np.random.default_rng(seed)
    g = 4 if cell == "lstm" else 3
    xp = rng.normal(size=(batch, steps, g * hidden)).astype(dtype)
    w = (0.3 * rng.normal(size=(hidden, g * hidden))).astype(dtype)
    lengths = np.array([7, 1, 4, 6][:batch])
    return xp, w, lengths


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_ext
@pytest.mark.parametrize("cell", ["lstm", "gru"])
@pytest.mark.parametrize("dtype,tol", [(np.float64, 1e-12), (np.float32, 1e-5)])
@pytest.mark.parametrize("reverse", [False, True])
def test_backends_agree(cell, dtype, tol, reverse):
    xp, w, lengths = _inputs(cell, dtype)
    fwd_py, bwd_py = getattr(py, f"{cell}_forward"), getattr(py, f"{cell}_backward")
    fwd_c, bwd_c = getattr(compiled, f"{cell}_forward"), getattr(compiled, f"{cell}_backward")
    h1, c1 = fwd_py(xp, w, lengths, reverse)
    h2, c2 = fwd_c(xp, w, lengths, reverse)
    np.testing.assert_allclose(h1, h2, atol=tol)
    g = np.random.default_rng(9).normal(size=h1.shape).astype(dtype)
    for a, b in zip(bwd_py(c1, w, g), bwd_c(c2, w, g)):
        np.testing.assert_allclose(a, b, atol=tol)


@pytest.mark.parametrize("cell", ["lstm", "gru"])
def test_padding_is_ignored(cell):
    # junk past each row's length must not change its final state
    xp, w, lengths = _inputs(cell, np.float64)
    fwd = getattr(py, f"{cell}_forward")
    junk = xp.copy()
    for i, n in enumerate(lengths):
        junk[i, n:] = 1e3
    for reverse in (False, True):
        np.testing.assert_array_equal(fwd(xp, w, lengths, reverse)[0], fwd(junk, w, lengths, reverse)[0])


def test_single_step_lstm_closed_form():
    xp, w, _ = _inputs("lstm", np.float64, batch=1, steps=1)
    i, f, g, o = np.split(xp[0, 0], 4)
    sig = lambda z: 1 / (1 + np.exp(-z))
    expected = sig(o) * np.tanh(sig(i) * np.tanh(g))
    h, _ = py.lstm_forward(xp, w, np.array([1]), False)
    np.testing.assert_allclose(h[0], expected, atol=1e-14)


def test_single_step_gru_closed_form():
    xp, w, _ = _inputs("gru", np.float64, batch=1, steps=1)
    r, z, n = np.split(xp[0, 0], 3)
    sig = lambda v: 1 / (1 + np.exp(-v))
    expected = (1 - sig(z)) * np.tanh(n)  # h0 = 0
    h, _ = py.gru_forward(xp, w, np.array([1]), False)
    np.testing.assert_allclose(h[0], expected, atol=1e-14)


@pytest.mark.parametrize("cell", ["lstm", "gru"])
@pytest.mark.parametrize("reverse", [False, True])
def test_batch_of_one_and_read_only_inputs(cell, reverse):
    xp, w, _ = _inputs(cell, np.float32, batch=1)
    xp.setflags(write=False)
    w.setflags(write=False)
    lengths = np.array([5])
    lengths.setflags(write=False)
    for mod in filter(None, (py, kernels.compiled_backend)):
        h, cache = getattr(mod, f"{cell}_forward")(xp, w, lengths, reverse)
        dxp, dw = getattr(mod, f"{cell}_backward")(cache, w, np.ones_like(h))
        assert h.shape == (1, 5) and dxp.shape == xp.shape and dw.shape == w.shape
