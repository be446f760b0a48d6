import numpy as np
import pytest

from emodep.errors import ChecksumError, CheckpointMismatch, NonFiniteGradient
from emodep.tensor import Adam, adam_step, clip_grad_norm, load_checkpoint, save_checkpoint, xavier_uniform
from emodep.tensor.autograd import Tensor
from emodep.tensor.checkpoint import decode, encode
from emodep.tensor.optim import OptimizerState


def test_zero_gradient_is_fixed_point():
    p = {"w": Tensor(np.array([1.0, -2.0]))}
    adam_step(OptimizerState(lr=0.1), p, {"w": np.zeros(2)})
    np.testing.assert_array_equal(p["w"].data, [1.0, -2.0])


def test_one_step_on_identity():
    # m1 = 0.1 g, v1 = 0.001 g^2; bias-corrected ratio = g / |g| = 1, so dx = -lr / (1 + eps)
    p = {"x": Tensor(np.array([0.0]))}
    state = OptimizerState(lr=0.1)
    adam_step(state, p, {"x": np.array([1.0])})
    assert p["x"].data[0] == pytest.approx(-0.1 / (1 + 1e-8), abs=1e-12)
    assert state.step == 1


def test_non_finite_gradient():
    with pytest.raises(NonFiniteGradient):
        adam_step(OptimizerState(), {"w": Tensor(np.zeros(2))}, {"w": np.array([np.nan, 0.0])})


def _trajectory(seed):
    rng = np.random.default_rng(seed)
    w = Tensor(xavier_uniform(rng, 4, 3, dtype=np.float64), requires_grad=True)
    opt = Adam({"w": w}, lr=1e-2)
    target = rng.normal(size=(4, 3))
    for _ in range(20):
        opt.zero_grad()
        w.grad = 2 * (w.data - target)
        opt.step()
    return w.data.copy()


def test_determinism():
    assert np.array_equal(_trajectory(4), _trajectory(4))


def test_xavier_bounds():
    w = xavier_uniform(np.random.default_rng(0), 100, 50)
    assert np.abs(w).max() <= np.sqrt(6 / 150) and w.dtype == np.float32


def test_clip_grad_norm():
    a, b = Tensor(np.zeros(2)), Tensor(np.zeros(1))
    a.grad, b.grad = np.array([3.0, 0.0]), np.array([4.0])
    assert clip_grad_norm([a, b], 1.0) == pytest.approx(5.0)
    assert np.sqrt(np.sum(a.grad**2) + np.sum(b.grad**2)) == pytest.approx(1.0)


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {"b": rng.normal(size=3).astype(np.float32), "a.W": rng.normal(size=(2, 5)).astype(np.float32)}
    save_checkpoint(tmp_path / "m.ckpt", tensors, meta={"k": 1})
    back, meta = load_checkpoint(tmp_path / "m.ckpt")
    assert meta == {"k": 1}
    for n in tensors:
        assert back[n].tobytes() == tensors[n].tobytes()
    assert encode(tensors, {"k": 1}) == (tmp_path / "m.ckpt").read_bytes()


def test_checkpoint_corruption():
    blob = encode({"w": np.ones((3, 3), dtype=np.float32)})
    with pytest.raises(ChecksumError):
        decode(blob[:-5])
    with pytest.raises(ChecksumError):
        decode(b"XXXX" + blob[4:])
    flipped = bytearray(blob)
    flipped[-1] ^= 0xFF
    with pytest.raises(ChecksumError):
        decode(bytes(flipped))


def test_checkpoint_shape_verification():
    blob = encode({"w": np.ones((3, 3), dtype=np.float32)})
    with pytest.raises(CheckpointMismatch, match="w"):
        decode(blob, expected_shapes={"w": (3, 4)})
    with pytest.raises(CheckpointMismatch, match="missing"):
        decode(blob, expected_shapes={"w": (3, 3), "v": (1,)})
