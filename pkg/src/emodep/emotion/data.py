"""Segment-level records for emotion pretraining and downstream use."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import EmptyDataset, LabelMissing, ModalityMismatch, ShapeError

EMOTIONS = ("angry", "happy", "sad", "neutral")
ATTRIBUTES = ("valence", "activation", "dominance")
CONTEXT = 3  # utterances on each side
EMBED_DIM = 768
FEAT_DIM = 80
_LABEL_ALIASES = {"excited": "happy", "exc": "happy", "ang": "angry", "hap": "happy", "neu": "neutral"}


def normalize_label(label):
    """Canonical category name; ``excited`` folds into ``happy``."""
    if label is None:
        return None
    name = str(label).strip().lower()
    name = _LABEL_ALIASES.get(name, name)
    if name not in EMOTIONS:
        raise LabelMissing(f"unknown emotion label {label!r}; expected one of {EMOTIONS} or 'excited'")
    return name


@dataclass
class EmotionSegment:
    id: str
    audio: Optional[np.ndarray] = None  # (T, 80)
    context: Optional[np.ndarray] = None  # (7, 768), rows t-3 .. t+3
    label: Optional[str] = None
    attributes: Optional[tuple] = None  # (valence, activation, dominance) on [1, 5]
    sentiment: Optional[float] = None  # [-3, 3]
    session_id: str = ""
    embedding: Optional[np.ndarray] = None  # this utterance's own sentence vector

    def __post_init__(self):
        if self.audio is None and self.context is None and self.embedding is None:
            raise ModalityMismatch(f"segment {self.id!r} has neither audio nor text")
        if self.audio is not None:
            self.audio = np.asarray(self.audio)
            if self.audio.ndim != 2 or self.audio.shape[1] != FEAT_DIM:
                raise ShapeError(f"segment {self.id!r}: audio must be (T, {FEAT_DIM}), got {self.audio.shape}")
        if self.context is not None:
            self.context = np.asarray(self.context)
            if self.context.shape != (2 * CONTEXT + 1, EMBED_DIM):
                raise ShapeError(
                    f"segment {self.id!r}: context must be ({2 * CONTEXT + 1}, {EMBED_DIM}), got {self.context.shape}"
                )
        self.label = normalize_label(self.label)
        if self.attributes is not None:
            self.attributes = tuple(float(a) for a in self.attributes)

    @property
    def has_audio(self):
        return self.audio is not None

    @property
    def has_text(self):
        return self.context is not None

    @property
    def label_index(self):
        if self.label is None:
            raise LabelMissing(f"segment {self.id!r} has no categorical label")
        return EMOTIONS.index(self.label)


def context_windows(embeddings, context=CONTEXT):
    """Stack ``[t-context, t+context]`` neighbours per utterance, replicating the edges."""
    emb = np.asarray(embeddings)
    n = emb.shape[0]
    if n == 0:
        return np.zeros((0, 2 * context + 1) + emb.shape[1:], dtype=emb.dtype)
    offsets = np.arange(-context, context + 1)
    idx = np.clip(np.arange(n)[:, None] + offsets[None, :], 0, n - 1)
    return emb[idx]


@dataclass
class EmotionDataset:
    train: Sequence[EmotionSegment]
    dev: Sequence[EmotionSegment] = ()

    def __post_init__(self):
        self.train = list(self.train)
        self.dev = list(self.dev)
        if not self.train:
            raise EmptyDataset("emotion training split is empty")
