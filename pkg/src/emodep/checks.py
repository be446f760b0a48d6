"""Gradient checks for every layer type and for the full emotion model.

Each check builds a small float64 problem, reduces the layer output to a
scalar through a fixed random projection, and compares autograd against
central differences with :func:`grad_check`.
"""

from __future__ import annotations

import numpy as np

from .emotion.data import EmotionSegment
from .emotion.model import EmotionConfig, EmotionModel, attention_penalty, res_tdnn_forward, self_attentive_pool, text_branch
from .emotion.train import segment_loss
from .tensor import ag, grad_check
from .tensor.autograd import Tensor
from .tensor.recurrent import bidirectional_final, gru_final, lstm_final


def _p(rng, *shape, scale=1.0, positive=False):
    x = rng.normal(size=shape) * scale
    if positive:
        x = np.abs(x) + 0.5
    return Tensor(x, requires_grad=True)


def _cases(rng):
    a, b = _p(rng, 3, 4), _p(rng, 3, 4)
    m1, m2 = _p(rng, 3, 5), _p(rng, 5, 2)
    pos = _p(rng, 3, 4, positive=True)
    v = _p(rng, 6)
    cases = {
        "add": ({"a": a, "b": b}, lambda: a + b),
        "sub": ({"a": a, "b": b}, lambda: a - b),
        "mul": ({"a": a, "b": b}, lambda: a * b),
        "broadcast_add": ({"a": a, "v": v}, lambda: a + v[:4]),
        "matmul": ({"m1": m1, "m2": m2}, lambda: m1 @ m2),
        "transpose": ({"m1": m1}, lambda: ag.transpose(m1)),
        "reshape": ({"m1": m1}, lambda: ag.reshape(m1, (5, 3))),
        "concat": ({"a": a, "b": b}, lambda: ag.concat([a, b], axis=1)),
        "getitem": ({"v": v}, lambda: v[np.array([0, 2, 2, 5])]),
        "tanh": ({"a": a}, lambda: ag.tanh(a)),
        "sigmoid": ({"a": a}, lambda: ag.sigmoid(a)),
        "relu": ({"a": a}, lambda: ag.relu(a)),
        "exp": ({"a": a}, lambda: ag.exp(a)),
        "log": ({"pos": pos}, lambda: ag.log(pos)),
        "square": ({"a": a}, lambda: ag.square(a)),
        "softmax": ({"a": a}, lambda: ag.softmax(a)),
        "log_softmax": ({"a": a}, lambda: ag.log_softmax(a)),
        "sum_axis": ({"a": a}, lambda: ag.sum(a, axis=0)),
        "mean": ({"a": a}, lambda: ag.mean(a, axis=1)),
        "huber": ({"a": a}, lambda: ag.huber(a * 1.5, 1.0)),
        "bce_with_logits": ({"v": v}, lambda: ag.bce_with_logits(v, np.array([0, 1, 1, 0, 1, 0.0]))),
        "cross_entropy": ({"v": v}, lambda: ag.cross_entropy(v, 3)),
    }

    x = _p(rng, 3, 5, 4, scale=0.5)
    lengths = np.array([5, 3, 1])
    for cell, final, gates in (("lstm", lstm_final, 4), ("gru", gru_final, 3)):
        wi, wh, bb = _p(rng, 4, 3 * gates, scale=0.4), _p(rng, 3, 3 * gates, scale=0.4), _p(rng, 3 * gates, scale=0.1)
        cases[cell] = ({"x": x, "w_ih": wi, "w_hh": wh, "b": bb}, lambda f=final, wi=wi, wh=wh, bb=bb: f(x, wi, wh, bb, lengths))
        cases[f"{cell}_reverse"] = (
            {"x": x, "w_ih": wi, "w_hh": wh, "b": bb},
            lambda f=final, wi=wi, wh=wh, bb=bb: f(x, wi, wh, bb, lengths, reverse=True),
        )
        wi2, wh2, bb2 = _p(rng, 4, 3 * gates, scale=0.4), _p(rng, 3, 3 * gates, scale=0.4), _p(rng, 3 * gates, scale=0.1)
        cases[f"bi_{cell}"] = (
            {"x": x, "w_ih": wi, "w_hh": wh, "b": bb, "w_ih2": wi2, "w_hh2": wh2, "b2": bb2},
            lambda c=cell, wi=wi, wh=wh, bb=bb, wi2=wi2, wh2=wh2, bb2=bb2: bidirectional_final(c, x, (wi, wh, bb), (wi2, wh2, bb2), lengths),
        )

    small = EmotionConfig(feat_dim=6, tdnn_width=8, tdnn_contexts=((-1, 0, 1), (-1, 1), (0,)))
    frames = _p(rng, 9, 6)
    tdnn = {f"tdnn{k}.W": _p(rng, len(c) * (6 if k == 0 else 8), 8, scale=0.5) for k, c in enumerate(small.tdnn_contexts)}
    tdnn.update({f"tdnn{k}.b": _p(rng, 8, scale=0.1) for k in range(3)})
    cases["res_tdnn"] = ({"frames": frames, **tdnn}, lambda: res_tdnn_forward(frames, tdnn, small))
    valid = EmotionConfig(feat_dim=6, tdnn_width=8, tdnn_contexts=small.tdnn_contexts, tdnn_padding="valid")
    cases["res_tdnn_valid"] = ({"frames": frames, **tdnn}, lambda: res_tdnn_forward(frames, tdnn, valid))

    h = _p(rng, 7, 6)
    w1, w2 = _p(rng, 6, 4, scale=0.5), _p(rng, 4, 5, scale=0.5)
    pw, pb = _p(rng, 30, 3, scale=0.3), _p(rng, 3, scale=0.1)
    cases["attentive_pool"] = ({"h": h, "w1": w1, "w2": w2, "pw": pw, "pb": pb}, lambda: self_attentive_pool(h, w1, w2, pw, pb)[0])
    logits = _p(rng, 5, 7)
    cases["attention_penalty"] = ({"scores": logits}, lambda: attention_penalty(ag.softmax(logits), 0.1, 0.1, 0.1))

    ctx = _p(rng, 7, 10)
    text = {
        "text_fc.W": _p(rng, 10, 6, scale=0.4),
        "text_fc.b": _p(rng, 6, scale=0.1),
        "text_att.W1": _p(rng, 6, 4, scale=0.5),
        "text_att.W2": _p(rng, 4, 5, scale=0.5),
        "text_proj.W": _p(rng, 30, 4, scale=0.3),
        "text_proj.b": _p(rng, 4, scale=0.1),
    }
    cases["text_branch"] = ({"context": ctx, **text}, lambda: text_branch(ctx, text)[0])
    return cases


def layer_gradchecks(seed=0):
    """Name -> max relative error for every layer type."""
    rng = np.random.default_rng(seed)
    out = {}
    for name, (params, build) in _cases(rng).items():
        proj_rng = np.random.default_rng([seed, len(out)])
        weights = {}

        def loss(build=build, weights=weights):
            y = build()
            if y.ndim == 0:
                return y
            if "w" not in weights:
                weights["w"] = proj_rng.normal(size=y.shape)
            return ag.sum(y * weights["w"])

        out[name] = grad_check(loss, params, rng=np.random.default_rng(seed))
    return out


def model_gradcheck(mode="iemocap", modality="A+T", frames=20, coords=4, seed=0):
    """Max relative error of the full model forward plus its training loss, float64."""
    cfg = EmotionConfig(mode=mode, modality=modality)
    model = EmotionModel.create(cfg, seed=seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    seg = EmotionSegment(
        id="gradcheck",
        audio=rng.normal(size=(frames, cfg.feat_dim)),
        context=rng.normal(size=(7, cfg.embed_dim)) * 0.5,
        label="sad",
        attributes=(2.0, 3.5, 4.0),
        sentiment=1.5,
    )
    return grad_check(lambda: segment_loss(model, seg), model.params, coords=coords, rng=np.random.default_rng(seed))
