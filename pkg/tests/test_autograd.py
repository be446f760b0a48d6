import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emodep.checks import layer_gradchecks
from emodep.errors import NonFiniteLoss, ShapeError
from emodep.tensor import ag, grad_check
from emodep.tensor.autograd import Tensor


def leaf(x):
    return Tensor(np.asarray(x, dtype=np.float64), requires_grad=True)


def test_softmax_constant_row():
    np.testing.assert_allclose(ag.softmax(Tensor(np.full((1, 4), 7.0))).data, [[0.25] * 4])


def test_tanh_derivative_at_zero():
    x = leaf(0.0)
    ag.tanh(x).backward()
    assert x.grad == pytest.approx(1.0)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(4, 2\)"):
        Tensor(np.zeros((2, 3))) @ Tensor(np.zeros((4, 2)))


def test_square_grad_check():
    x = leaf([3.0])
    f = lambda: ag.sum(ag.square(x))
    f().backward()
    assert x.grad[0] == pytest.approx(6.0, abs=1e-12)
    assert grad_check(f, {"x": x}) < 1e-6


def test_tanh_network_grad_check():
    rng = np.random.default_rng(0)
    w1, w2 = leaf(rng.normal(size=(2, 3))), leaf(rng.normal(size=(3, 1)))
    b = leaf([0.1])
    x = rng.normal(size=(4, 2))
    params = {"w1": w1, "w2": w2, "b": b}
    assert sum(p.data.size for p in params.values()) == 10
    assert grad_check(lambda: ag.sum(ag.tanh(ag.tanh(Tensor(x) @ w1) @ w2 + b)), params) < 1e-4


def test_non_differentiable_point_excluded():
    # relu at 0: autograd uses the 0 subgradient, central differences see 0.5
    x = leaf([0.0, 1.5])
    f = lambda: ag.sum(ag.relu(x))
    assert grad_check(f, {"x": x}) == pytest.approx(0.5)
    assert grad_check(f, {"x": x}, exclude={"x": [0]}) < 1e-8


def test_abs_symmetric_at_zero():
    x = leaf([0.0])
    assert grad_check(lambda: ag.sum(ag.relu(x) + ag.relu(-x)), {"x": x}) < 1e-12


def test_grad_check_refines_near_a_kink():
    x = leaf([2e-6])  # within eps of the ReLU kink
    assert grad_check(lambda: ag.sum(ag.relu(x)), {"x": x}) < 1e-6


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss():
    x = leaf([-1.0])
    with pytest.raises(NonFiniteLoss):
        grad_check(lambda: ag.sum(ag.log(x)), {"x": x})


def test_every_layer_type_grad_check():
    errors = layer_gradchecks(seed=0)
    assert {"matmul", "add", "concat", "getitem", "tanh", "sigmoid", "relu", "softmax", "log", "mean", "mul", "transpose",
            "lstm", "gru", "res_tdnn", "attentive_pool", "attention_penalty", "text_branch"} <= set(errors)
    bad = {k: v for k, v in errors.items() if not v < 1e-4}
    assert not bad


OPS = {
    "tanh": ag.tanh,
    "sigmoid": ag.sigmoid,
    "exp": ag.exp,
    "softmax": ag.softmax,
    "log_softmax": ag.log_softmax,
    "square": ag.square,
    "mean": lambda a: ag.mean(a, axis=0),
    "transpose_matmul": lambda a: ag.transpose(a) @ a,
    "concat": lambda a: ag.concat([a, a * 2.0], axis=0),
    "slice": lambda a: a[1:, :2],
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_ops_at_20_random_points(name):
    rng = np.random.default_rng(abs(hash(name)) % 2**32)
    for _ in range(20):
        x = leaf(rng.normal(size=(3, 4)))
        w = rng.normal(size=OPS[name](Tensor(x.data)).shape)
        assert grad_check(lambda: ag.sum(OPS[name](x) * w), {"x": x}) < 1e-4


def test_log_and_relu_away_from_singularities():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = leaf(np.abs(rng.normal(size=6)) + 0.2)
        assert grad_check(lambda: ag.sum(ag.log(x)), {"x": x}) < 1e-4
        y = leaf(rng.normal(size=6))
        y.data[np.abs(y.data) < 1e-3] = 0.5
        assert grad_check(lambda: ag.sum(ag.relu(y) * 3.0), {"y": y}) < 1e-4


def test_softmax_rows_normalized():
    rng = np.random.default_rng(2)
    s = ag.softmax(Tensor(rng.normal(size=(5, 9)) * 10)).data
    assert np.all(s >= 0)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_backward_linearity(seed):
    rng = np.random.default_rng(seed)
    x = leaf(rng.normal(size=(3, 3)))
    f = lambda: ag.sum(ag.tanh(x @ x))
    g = lambda: ag.sum(ag.sigmoid(x) * 2.0)
    f().backward()
    gf = x.grad.copy()
    x.grad = None
    g().backward()
    gg = x.grad.copy()
    x.grad = None
    (f() + g()).backward()
    np.testing.assert_allclose(x.grad, gf + gg, rtol=1e-12, atol=1e-12)


def test_leaf_gradients_accumulate():
    x = leaf([2.0])
    ag.sum(x * 3.0).backward()
    ag.sum(x * 3.0).backward()
    assert x.grad[0] == 6.0


def test_no_graph_for_frozen_inputs():
    a = Tensor(np.ones((2, 2)))
    y = ag.tanh(a @ a)
    assert not y.requires_grad and y._parents == ()


def test_bias_broadcast_and_gradient():
    x, b = leaf(np.ones((4, 3))), leaf(np.zeros(3))
    ag.sum(x + b).backward()
    np.testing.assert_array_equal(b.grad, [4.0, 4.0, 4.0])


def test_huber_values():
    r = Tensor(np.array([2.0, 0.5, -2.0]))
    np.testing.assert_allclose(ag.huber(r, 1.0).data, [1.5, 0.125, 1.5])


def test_bce_and_cross_entropy_values():
    np.testing.assert_allclose(ag.bce_with_logits(Tensor(np.array([0.0])), np.array([1.0])).data, [np.log(2)])
    ce = ag.cross_entropy(Tensor(np.zeros(4)), 2)
    assert float(ce.data) == pytest.approx(np.log(4))
