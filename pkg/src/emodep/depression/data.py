"""Sessions (one interview, one depression label) and per-modality session inputs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptySession, InvalidInput, ModalityMismatch

MODALITIES = ("audio", "text", "emotion")


@dataclass
class Session:
    id: str
    segments: list
    label: int = None  # 1 depressed, 0 healthy
    split: str = "train"

    def __post_init__(self):
        if not self.segments:
            raise EmptySession(f"session {self.id!r} has no segments")
        if self.label is not None:
            self.label = int(self.label)


@dataclass
class SessionInputs:
    """Padded per-modality inputs for a list of sessions."""

    ids: list
    sequences: list  # each (S_i, D)
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.ids)

    @property
    def dim(self):
        return self.sequences[0].shape[1]

    def subset(self, idx):
        return SessionInputs([self.ids[i] for i in idx], [self.sequences[i] for i in idx], self.labels[list(idx)], self.meta)


def load_sessions(manifest, frontend=None):
    """Build :class:`Session` objects from a depression manifest."""
    from ..frontend import FrontendConfig
    from ..manifest import load_segments

    segs = load_segments(manifest, frontend or FrontendConfig())
    entries = manifest.sessions()
    return [Session(id=sid, segments=segs[sid], label=entries[sid][0].depression, split=entries[sid][0].split) for sid in segs]


def audio_summary(segment):
    """Mean and standard deviation of the FBK+delta frames (160-d)."""
    if segment.audio is None:
        raise ModalityMismatch(f"segment {segment.id!r} has no audio")
    a = np.asarray(segment.audio, dtype=np.float64)
    return np.concatenate([a.mean(axis=0), a.std(axis=0)])


def session_sequence(modality, session, features=None):
    """``(S, D)`` input sequence of one session for ``modality``."""
    if modality == "audio":
        return np.stack([audio_summary(s) for s in session.segments])
    if modality == "text":
        rows = []
        for s in session.segments:
            if s.embedding is None:
                raise ModalityMismatch(f"segment {s.id!r} has no utterance embedding")
            rows.append(np.asarray(s.embedding, dtype=np.float64))
        return np.stack(rows)
    if modality == "emotion":
        if features is None:
            raise ModalityMismatch(f"session {session.id!r}: emotion modality needs extracted features")
        return np.asarray(features, dtype=np.float64)
    raise InvalidInput(f"unknown depression modality {modality!r}; expected one of {MODALITIES}")


def build_inputs(modality, sessions, features=None):
    """SessionInputs for ``sessions``; ``features`` maps session id -> (S, dim) for the emotion modality."""
    seqs, ids, labels = [], [], []
    for sess in sessions:
        feat = None
        if modality == "emotion":
            if features is None or sess.id not in features:
                raise ModalityMismatch(f"no emotion features for session {sess.id!r}")
            feat = features[sess.id]
            feat = getattr(feat, "values", feat)
            if feat.shape[0] != len(sess.segments):
                raise ModalityMismatch(f"session {sess.id!r}: {feat.shape[0]} feature rows for {len(sess.segments)} segments")
        seqs.append(session_sequence(modality, sess, feat))
        ids.append(sess.id)
        labels.append(-1 if sess.label is None else sess.label)
    return SessionInputs(ids, seqs, np.asarray(labels, dtype=np.int64), {"modality": modality})
