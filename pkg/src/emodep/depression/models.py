"""Bidirectional recurrent session classifiers.

Each model reads an ``(S, D)`` sequence, runs a one-layer bidirectional LSTM
or GRU (64 units per direction), concatenates the final forward and final
backward states and maps them through an FC layer and a sigmoid.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptySession, ShapeError
from ..tensor import ag
from ..tensor.autograd import Tensor
from ..tensor.optim import xavier_uniform
from ..tensor.recurrent import bidirectional_final
from .data import audio_summary, session_sequence

CELL_FOR_MODALITY = {"audio": "gru", "text": "lstm", "emotion": "lstm"}


@dataclass(frozen=True)
class SessionModelConfig:
    input_dim: int
    cell: str = "lstm"
    hidden: int = 64

    @property
    def gates(self):
        return 4 if self.cell == "lstm" else 3

    def to_dict(self):
        return asdict(self)


def param_shapes(cfg):
    g, h, d = cfg.gates, cfg.hidden, cfg.input_dim
    shapes = {}
    for direction in ("fwd", "bwd"):
        shapes[f"{direction}.W_ih"] = (d, g * h)
        shapes[f"{direction}.W_hh"] = (h, g * h)
        shapes[f"{direction}.b"] = (g * h,)
    shapes["out.W"] = (2 * h, 1)
    shapes["out.b"] = (1,)
    return shapes


class SessionModel:
    """Parameters of one bidirectional session classifier plus input standardisation."""

    def __init__(self, cfg, arrays, mean=None, std=None, dtype=np.float32):
        self.cfg = cfg
        self.params = {n: Tensor(np.array(a, dtype=dtype), requires_grad=True, name=n) for n, a in sorted(arrays.items())}
        self.mean = np.zeros(cfg.input_dim) if mean is None else np.asarray(mean, dtype=np.float64)
        self.std = np.ones(cfg.input_dim) if std is None else np.asarray(std, dtype=np.float64)

    @classmethod
    def create(cls, cfg, rng, dtype=np.float32):
        arrays = {}
        for name, shape in param_shapes(cfg).items():
            arrays[name] = np.zeros(shape, dtype=dtype) if len(shape) == 1 else xavier_uniform(rng, *shape, dtype=dtype)
        return cls(cfg, arrays, dtype=dtype)

    @classmethod
    def zeros(cls, cfg, dtype=np.float32):
        return cls(cfg, {n: np.zeros(s, dtype=dtype) for n, s in param_shapes(cfg).items()}, dtype=dtype)

    @property
    def dtype(self):
        return self.params["out.W"].dtype

    def arrays(self):
        return {n: p.data for n, p in self.params.items()}

    def fit_normalizer(self, sequences):
        rows = np.concatenate([np.asarray(s, dtype=np.float64) for s in sequences])
        self.mean = rows.mean(axis=0)
        self.std = np.where(rows.std(axis=0) > 1e-8, rows.std(axis=0), 1.0)

    def pack(self, sequences):
        """Standardise and zero-pad sequences into ``(B, S_max, D)`` plus lengths."""
        if any(len(s) == 0 for s in sequences):
            raise EmptySession("cannot score a session with no segments")
        lengths = np.array([len(s) for s in sequences], dtype=np.int64)
        d = self.cfg.input_dim
        x = np.zeros((len(sequences), int(lengths.max()), d), dtype=self.dtype)
        for i, s in enumerate(sequences):
            s = np.asarray(s, dtype=np.float64)
            if s.ndim != 2 or s.shape[1] != d:
                raise ShapeError(f"session input {i} has shape {s.shape}, expected (S, {d})")
            x[i, : len(s)] = (s - self.mean) / self.std
        return x, lengths

    def logits(self, sequences):
        x, lengths = self.pack(sequences)
        p = self.params
        fwd = (p["fwd.W_ih"], p["fwd.W_hh"], p["fwd.b"])
        bwd = (p["bwd.W_ih"], p["bwd.W_hh"], p["bwd.b"])
        h = bidirectional_final(self.cfg.cell, Tensor(x), fwd, bwd, lengths)
        return ag.reshape(h @ p["out.W"] + p["out.b"], (-1,))

    def predict_proba(self, sequences):
        flags = [q.requires_grad for q in self.params.values()]
        for q in self.params.values():
            q.requires_grad = False
        try:
            z = self.logits(sequences).data.astype(np.float64)
        finally:
            for q, f in zip(self.params.values(), flags):
                q.requires_grad = f
        return 1.0 / (1.0 + np.exp(-z))

    def state(self):
        return {"config": self.cfg.to_dict(), "mean": self.mean.tolist(), "std": self.std.tolist()}


def emotion_session_model(features, model):
    """Depression probability from an ``(S, dim)`` sequence of emotion features."""
    return float(model.predict_proba([np.asarray(features)])[0])


def audio_session_model(session, model):
    """Depression probability from per-segment FBK mean/std summaries."""
    return float(model.predict_proba([session_sequence("audio", session)])[0])


def text_session_model(session, model):
    """Depression probability from the per-utterance sentence embeddings."""
    return float(model.predict_proba([session_sequence("text", session)])[0])


__all__ = [
    "CELL_FOR_MODALITY",
    "SessionModel",
    "SessionModelConfig",
    "audio_session_model",
    "audio_summary",
    "emotion_session_model",
    "text_session_model",
]
