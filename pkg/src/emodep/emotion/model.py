"""Two-branch emotion recogniser.

Audio: Res-TDNN over FBK+delta frames, five-head self-attentive pooling,
projection to 128.  Text: shared FC over a 7-utterance embedding window,
five-head self-attentive pooling, projection to 320.  The branch outputs are
concatenated, passed through the fusion FC and on to the task heads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import CheckpointMismatch, InvalidInput, ModalityMismatch, SequenceTooShort, ShapeError
from ..tensor import ag, checkpoint
from ..tensor.autograd import Tensor
from ..tensor.optim import xavier_uniform
from .data import CONTEXT, EMBED_DIM, EMOTIONS, FEAT_DIM

MODES = ("iemocap", "mosei")
MODALITIES = ("A", "T", "A+T")
N_HEADS = 5
SPIKY_HEADS = (0, 1, 2)
SMOOTH_HEADS = (3, 4)
# printed as "[2,+2]" in the source description; read as the dense window -2..+2
TDNN_CONTEXTS = ((-2, -1, 0, 1, 2), (-1, 2), (-3, 3), (-7, 2))


def parse_modality(value):
    v = str(value).strip().upper().replace("T+A", "A+T")
    aliases = {"A": "A", "AUDIO": "A", "T": "T", "TEXT": "T", "AT": "A+T", "A+T": "A+T", "AUDIO+TEXT": "A+T"}
    if v not in aliases:
        raise InvalidInput(f"unknown modality {value!r}; expected a, t or at")
    return aliases[v]


@dataclass(frozen=True)
class EmotionConfig:
    mode: str = "iemocap"
    modality: str = "A+T"
    feat_dim: int = FEAT_DIM
    embed_dim: int = EMBED_DIM
    tdnn_width: int = 512
    tdnn_contexts: tuple = TDNN_CONTEXTS
    tdnn_padding: str = "replicate"  # or "valid"
    audio_attention_dim: int = 128
    audio_out: int = 128
    text_fc: int = 256
    text_attention_dim: int = 64
    text_out: int = 320
    fusion_width: int = 128
    n_heads: int = N_HEADS
    lambda_div: float = 0.1
    lambda_spiky: float = 0.1
    lambda_smooth: float = 0.1
    attr_weight: float = 1.0
    huber_delta: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInput(f"unknown mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "modality", parse_modality(self.modality))
        object.__setattr__(self, "tdnn_contexts", tuple(tuple(int(o) for o in c) for c in self.tdnn_contexts))
        if self.tdnn_padding not in ("replicate", "valid"):
            raise InvalidInput(f"tdnn_padding must be 'replicate' or 'valid', got {self.tdnn_padding!r}")

    @property
    def uses_audio(self):
        return "A" in self.modality

    @property
    def uses_text(self):
        return "T" in self.modality

    @property
    def feature_dim(self):
        """Width of the fusion-layer input, i.e. of the transferred emotion feature."""
        return (self.audio_out if self.uses_audio else 0) + (self.text_out if self.uses_text else 0)

    @property
    def context_left(self):
        return sum(-min(c) for c in self.tdnn_contexts)

    @property
    def context_right(self):
        return sum(max(c) for c in self.tdnn_contexts)

    @property
    def min_frames(self):
        return 1 if self.tdnn_padding == "replicate" else self.context_left + self.context_right + 1

    def to_dict(self):
        d = asdict(self)
        d["tdnn_contexts"] = [list(c) for c in self.tdnn_contexts]
        return d

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        if "tdnn_contexts" in known:
            known["tdnn_contexts"] = tuple(tuple(c) for c in known["tdnn_contexts"])
        return cls(**known)


@dataclass
class Prediction:
    class_logits: np.ndarray = None
    attributes: np.ndarray = None
    sentiment_logit: float = None
    audio_attention: np.ndarray = None
    text_attention: np.ndarray = None


@dataclass
class ForwardOutput:
    """Graph-carrying outputs of one forward pass."""

    feature: Tensor
    class_logits: Tensor = None
    attributes: Tensor = None
    sentiment_logit: Tensor = None
    attentions: list = field(default_factory=list)

    def to_prediction(self):
        att = {name: a.data.copy() for name, a in self.attentions}
        return Prediction(
            class_logits=None if self.class_logits is None else self.class_logits.data.copy(),
            attributes=None if self.attributes is None else self.attributes.data.copy(),
            sentiment_logit=None if self.sentiment_logit is None else float(self.sentiment_logit.data[0]),
            audio_attention=att.get("audio"),
            text_attention=att.get("text"),
        )


def param_shapes(cfg):
    shapes = {}
    if cfg.uses_audio:
        d_in = cfg.feat_dim
        for k, ctx in enumerate(cfg.tdnn_contexts):
            shapes[f"tdnn{k}.W"] = (len(ctx) * d_in, cfg.tdnn_width)
            shapes[f"tdnn{k}.b"] = (cfg.tdnn_width,)
            d_in = cfg.tdnn_width
        shapes["audio_att.W1"] = (cfg.tdnn_width, cfg.audio_attention_dim)
        shapes["audio_att.W2"] = (cfg.audio_attention_dim, cfg.n_heads)
        shapes["audio_proj.W"] = (cfg.n_heads * cfg.tdnn_width, cfg.audio_out)
        shapes["audio_proj.b"] = (cfg.audio_out,)
    if cfg.uses_text:
        shapes["text_fc.W"] = (cfg.embed_dim, cfg.text_fc)
        shapes["text_fc.b"] = (cfg.text_fc,)
        shapes["text_att.W1"] = (cfg.text_fc, cfg.text_attention_dim)
        shapes["text_att.W2"] = (cfg.text_attention_dim, cfg.n_heads)
        shapes["text_proj.W"] = (cfg.n_heads * cfg.text_fc, cfg.text_out)
        shapes["text_proj.b"] = (cfg.text_out,)
    shapes["fusion.W"] = (cfg.feature_dim, cfg.fusion_width)
    shapes["fusion.b"] = (cfg.fusion_width,)
    if cfg.mode == "iemocap":
        shapes["head_cls.W"] = (cfg.fusion_width, len(EMOTIONS))
        shapes["head_cls.b"] = (len(EMOTIONS),)
        shapes["head_attr.W"] = (cfg.fusion_width, 3)
        shapes["head_attr.b"] = (3,)
    else:
        shapes["head_sent.W"] = (cfg.fusion_width, 1)
        shapes["head_sent.b"] = (1,)
    return shapes


def init_params(cfg, rng, dtype=np.float32):
    params = {}
    for name, shape in param_shapes(cfg).items():
        if len(shape) == 1:
            arr = np.zeros(shape, dtype=dtype)
        else:
            arr = xavier_uniform(rng, shape[0], shape[1], dtype=dtype)
        params[name] = arr
    if cfg.mode == "iemocap":
        # attributes live on [1, 5]; start the regressor at the scale midpoint
        params["head_attr.b"][:] = 3.0
    return params


# -- layers ------------------------------------------------------------------


def res_tdnn_forward(frames, params, cfg):
    """Res-TDNN stack: ``(T, 80)`` -> ``(T', width)``.

    ``valid`` padding yields ``T' = T - (left + right)`` rows; ``replicate``
    pads the input by repeating its edge frames so ``T' = T``.
    """
    x = ag.as_tensor(frames)
    if x.ndim != 2 or x.shape[1] != cfg.feat_dim:
        raise ShapeError(f"TDNN input must be (T, {cfg.feat_dim}), got {x.shape}")
    t = x.shape[0]
    if t < cfg.min_frames:
        raise SequenceTooShort(f"{t} frames < {cfg.min_frames} needed by the TDNN context ({cfg.tdnn_padding})")
    if cfg.tdnn_padding == "replicate":
        idx = np.clip(np.arange(-cfg.context_left, t + cfg.context_right), 0, t - 1)
        x = x[idx]
    h = x
    for k, ctx in enumerate(cfg.tdnn_contexts):
        lo, hi = min(ctx), max(ctx)
        n_out = h.shape[0] - (hi - lo)
        spliced = ag.concat([h[o - lo:o - lo + n_out] for o in ctx], axis=1) if len(ctx) > 1 else h[:n_out]
        y = ag.relu(spliced @ params[f"tdnn{k}.W"] + params[f"tdnn{k}.b"])
        if h.shape[1] == y.shape[1]:
            y = y + h[-lo:-lo + n_out]
        h = y
    return h


def self_attentive_pool(h, w1, w2, proj_w, proj_b):
    """Multi-head attentive pooling; returns ``(pooled, A)`` with ``A`` of shape (heads, T)."""
    scores = ag.tanh(h @ w1) @ w2  # (T, heads)
    a = ag.softmax(ag.transpose(scores))  # rows sum to 1 over time
    m = a @ h  # (heads, d)
    flat = ag.reshape(m, (1, -1))
    pooled = ag.reshape(flat @ proj_w + proj_b, (-1,))
    return pooled, a


def attention_penalty(a, lambda_div, lambda_spiky, lambda_smooth, spiky=SPIKY_HEADS, smooth=SMOOTH_HEADS):
    """Diversity across heads plus norm targets: 1 for spiky heads, 1/T for smooth heads."""
    a = ag.as_tensor(a)
    n_heads, t = a.shape
    gram = a @ ag.transpose(a)
    off = np.ones((n_heads, n_heads), dtype=a.dtype) - np.eye(n_heads, dtype=a.dtype)
    div = ag.sum(ag.square(gram * off))
    sq_norm = ag.sum(gram * np.eye(n_heads, dtype=a.dtype), axis=1)  # ||a_h||^2
    spiky_mask = np.zeros(n_heads, dtype=a.dtype)
    spiky_mask[list(spiky)] = 1.0
    smooth_mask = np.zeros(n_heads, dtype=a.dtype)
    smooth_mask[list(smooth)] = 1.0
    spiky_term = ag.sum(ag.square(1.0 - sq_norm) * spiky_mask)
    smooth_term = ag.sum(ag.square(sq_norm - 1.0 / t) * smooth_mask)
    return lambda_div * div + lambda_spiky * spiky_term + lambda_smooth * smooth_term


def text_branch(context, params, cfg=None):
    """``(7, 768)`` embedding window -> 320-d text vector and its attention matrix."""
    c = ag.as_tensor(context)
    rows = 2 * CONTEXT + 1
    if c.ndim != 2 or c.shape[0] != rows:
        raise ShapeError(f"text context must have {rows} rows, got shape {c.shape}")
    h = ag.tanh(c @ params["text_fc.W"] + params["text_fc.b"])
    return self_attentive_pool(h, params["text_att.W1"], params["text_att.W2"], params["text_proj.W"], params["text_proj.b"])


def audio_branch(frames, params, cfg):
    h = res_tdnn_forward(frames, params, cfg)
    return self_attentive_pool(h, params["audio_att.W1"], params["audio_att.W2"], params["audio_proj.W"], params["audio_proj.b"])


# -- model -------------------------------------------------------------------


def params_hash(arrays):
    """SHA-256 over sorted names, shapes and float32 payloads."""
    h = hashlib.sha256()
    for name in sorted(arrays):
        arr = np.ascontiguousarray(np.asarray(arrays[name]), dtype="<f4")
        h.update(name.encode())
        h.update(json.dumps(list(arr.shape)).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


class EmotionModel:
    """Parameters plus configuration of one emotion recogniser."""

    def __init__(self, cfg, arrays, trainable=True, dtype=np.float32):
        self.cfg = cfg
        checkpoint.verify_shapes(arrays, param_shapes(cfg))
        self.params = {
            n: Tensor(np.array(a, dtype=dtype), requires_grad=trainable, name=n) for n, a in sorted(arrays.items())
        }
        self.meta = {}

    @classmethod
    def create(cls, cfg, seed=0, dtype=np.float32):
        rng = np.random.default_rng(seed)
        return cls(cfg, init_params(cfg, rng, dtype=dtype), dtype=dtype)

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def arrays(self):
        return {n: p.data for n, p in self.params.items()}

    def content_hash(self):
        return params_hash(self.arrays())

    def astype(self, dtype, trainable=None):
        t = next(iter(self.params.values())).requires_grad if trainable is None else trainable
        m = EmotionModel(self.cfg, self.arrays(), trainable=t, dtype=dtype)
        m.meta = dict(self.meta)
        return m

    def copy(self):
        return self.astype(self.dtype)

    def check_segment(self, segment):
        if self.cfg.uses_audio and segment.audio is None:
            raise ModalityMismatch(f"segment {segment.id!r} lacks audio required by modality {self.cfg.modality}")
        if self.cfg.uses_text and segment.context is None:
            raise ModalityMismatch(f"segment {segment.id!r} lacks text context required by modality {self.cfg.modality}")

    def branches(self, segment):
        """Fusion-layer input (the emotion feature) and the attention matrices."""
        self.check_segment(segment)
        parts, attentions = [], []
        dt = self.dtype
        if self.cfg.uses_audio:
            pooled, a = audio_branch(np.asarray(segment.audio, dtype=dt), self.params, self.cfg)
            parts.append(pooled)
            attentions.append(("audio", a))
        if self.cfg.uses_text:
            pooled, a = text_branch(np.asarray(segment.context, dtype=dt), self.params, self.cfg)
            parts.append(pooled)
            attentions.append(("text", a))
        feature = parts[0] if len(parts) == 1 else ag.concat(parts, axis=0)
        return feature, attentions

    def forward(self, segment):
        feature, attentions = self.branches(segment)
        p = self.params
        hidden = ag.relu(ag.reshape(feature, (1, -1)) @ p["fusion.W"] + p["fusion.b"])
        out = ForwardOutput(feature=feature, attentions=attentions)
        if self.cfg.mode == "iemocap":
            out.class_logits = ag.reshape(hidden @ p["head_cls.W"] + p["head_cls.b"], (-1,))
            out.attributes = ag.reshape(hidden @ p["head_attr.W"] + p["head_attr.b"], (-1,))
        else:
            out.sentiment_logit = ag.reshape(hidden @ p["head_sent.W"] + p["head_sent.b"], (-1,))
        return out

    def predict(self, segment):
        with_grad = [p.requires_grad for p in self.params.values()]
        for p in self.params.values():
            p.requires_grad = False
        try:
            return self.forward(segment).to_prediction()
        finally:
            for p, g in zip(self.params.values(), with_grad):
                p.requires_grad = g

    # -- persistence -----------------------------------------------------

    def save(self, path, extra_meta=None):
        """Write the checkpoint and its JSON sidecar; returns the checkpoint file hash."""
        path = Path(path)
        meta = {"mode": self.cfg.mode, "modality": self.cfg.modality, "config": self.cfg.to_dict()}
        meta.update(self.meta)
        meta.update(extra_meta or {})
        file_hash = checkpoint.save(path, self.arrays(), meta={"config": self.cfg.to_dict()})
        sidecar = {
            "mode": self.cfg.mode,
            "modality": self.cfg.modality,
            "dims": {
                "audio_out": self.cfg.audio_out if self.cfg.uses_audio else 0,
                "text_out": self.cfg.text_out if self.cfg.uses_text else 0,
                "feature_dim": self.cfg.feature_dim,
                "fusion_width": self.cfg.fusion_width,
                "tdnn_width": self.cfg.tdnn_width,
            },
            "penalty_weights": {
                "lambda_div": self.cfg.lambda_div,
                "lambda_spiky": self.cfg.lambda_spiky,
                "lambda_smooth": self.cfg.lambda_smooth,
            },
            "training": meta.get("training", {}),
            "seed": meta.get("seed"),
            "content_hash": self.content_hash(),
            "checkpoint_sha256": file_hash,
            "config": self.cfg.to_dict(),
        }
        sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        return file_hash

    @classmethod
    def load(cls, path, trainable=False):
        path = Path(path)
        arrays, meta = checkpoint.decode(_read_bytes(path))
        cfg_dict = meta.get("config")
        sc = sidecar_path(path)
        if cfg_dict is None and sc.exists():
            cfg_dict = json.loads(sc.read_text())["config"]
        if cfg_dict is None:
            raise CheckpointMismatch(f"{path}: no model configuration in checkpoint or sidecar")
        cfg = EmotionConfig.from_dict(cfg_dict)
        model = cls(cfg, arrays, trainable=trainable)
        if sc.exists():
            model.meta = json.loads(sc.read_text())
        return model

    def with_config(self, **changes):
        return EmotionModel(replace(self.cfg, **changes), self.arrays(), dtype=self.dtype)


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".json")


def _read_bytes(path):
    from ..errors import MissingFile

    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise MissingFile(f"checkpoint not found: {path}") from None
