"""Frozen emotion models as segment-level feature extractors.

The feature of a segment is the activation entering the fusion FC: the
128-d audio branch output, the 320-d text branch output, or both
concatenated (448-d).  Features are cached one file per session::

    b"EMDPFEAT" | u32 version | u32 header length | JSON header | float32-le rows

with header ``{segment_count, dim, checkpoint_hash, session_id, segment_ids}``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .emotion.model import EmotionModel
from .errors import ChecksumError, EmptySession, IoError, MissingFile

CACHE_MAGIC = b"EMDPFEAT"
CACHE_VERSION = 1


@dataclass(frozen=True)
class EmotionFeatureVector:
    values: np.ndarray
    source_checkpoint: str
    segment_id: str

    @property
    def dim(self):
        return self.values.shape[0]


class FrozenExtractor:
    """Read-only emotion model; its content hash is fixed at construction."""

    def __init__(self, model):
        frozen = model.astype(np.float32, trainable=False)
        for p in frozen.params.values():
            p.data.setflags(write=False)
        self._model = frozen
        self.hash = frozen.content_hash()

    @property
    def model(self):
        return self._model

    @property
    def cfg(self):
        return self._model.cfg

    @property
    def dim(self):
        return self._model.cfg.feature_dim

    @property
    def params(self):
        return self._model.params

    def current_hash(self):
        return self._model.content_hash()

    def verify(self):
        """Recompute the content hash; raise if the parameters changed."""
        now = self.current_hash()
        if now != self.hash:
            raise ChecksumError(f"frozen extractor parameters changed: {self.hash[:12]} -> {now[:12]}")
        return now

    def extract_segment(self, segment):
        feature, _ = self._model.branches(segment)
        return EmotionFeatureVector(values=np.array(feature.data, dtype=np.float32), source_checkpoint=self.hash, segment_id=segment.id)

    def extract_batch(self, segments):
        if not segments:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self.extract_segment(s).values for s in segments])

    def extract_session(self, session):
        segments = getattr(session, "segments", session)
        if len(segments) == 0:
            raise EmptySession(f"session {getattr(session, 'id', '?')!r} has no segments")
        return self.extract_batch(list(segments))


def freeze(source):
    """Build a FrozenExtractor from a model, another extractor, or a checkpoint path."""
    if isinstance(source, FrozenExtractor):
        return FrozenExtractor(source.model)
    if isinstance(source, (str, Path)):
        source = EmotionModel.load(source)
    return FrozenExtractor(source)


def extract_segment(extractor, segment):
    return extractor.extract_segment(segment)


def extract_session(extractor, session):
    return extractor.extract_session(session)


# -- feature cache -----------------------------------------------------------


@dataclass
class FeatureCache:
    session_id: str
    segment_ids: list
    checkpoint_hash: str
    values: np.ndarray  # (segments, dim)


def encode_cache(cache):
    values = np.ascontiguousarray(cache.values, dtype="<f4")
    header = {
        "segment_count": int(values.shape[0]),
        "dim": int(values.shape[1]),
        "checkpoint_hash": cache.checkpoint_hash,
        "session_id": cache.session_id,
        "segment_ids": list(cache.segment_ids),
    }
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return CACHE_MAGIC + struct.pack("<II", CACHE_VERSION, len(hb)) + hb + values.tobytes()


def decode_cache(blob):
    if blob[: len(CACHE_MAGIC)] != CACHE_MAGIC or len(blob) < len(CACHE_MAGIC) + 8:
        raise ChecksumError("not a feature cache file")
    version, hlen = struct.unpack_from("<II", blob, len(CACHE_MAGIC))
    if version != CACHE_VERSION:
        raise ChecksumError(f"unsupported feature cache version {version}")
    start = len(CACHE_MAGIC) + 8
    header = json.loads(blob[start:start + hlen].decode("utf-8"))
    payload = blob[start + hlen:]
    n, d = header["segment_count"], header["dim"]
    if len(payload) != 4 * n * d or len(header["segment_ids"]) != n:
        raise ChecksumError(f"feature cache for {header.get('session_id')!r} truncated: expected {n}x{d} floats")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(n, d)
    return FeatureCache(header["session_id"], header["segment_ids"], header["checkpoint_hash"], values)


def cache_filename(session_id):
    return f"{session_id}.feat"


def write_session_cache(out_dir, extractor, session):
    values = extractor.extract_session(session)
    cache = FeatureCache(session.id, [s.id for s in session.segments], extractor.hash, values)
    path = Path(out_dir) / cache_filename(session.id)
    try:
        path.write_bytes(encode_cache(cache))
    except OSError as exc:
        raise IoError(f"cannot write feature cache {path}: {exc}") from None
    return path


def extract_to_dir(extractor, sessions, out_dir):
    """Cache features for every session and write ``index.json``; returns the index."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create feature directory {out}: {exc}") from None
    index = {"checkpoint_hash": extractor.hash, "dim": extractor.dim, "modality": extractor.cfg.modality, "sessions": {}}
    for sess in sessions:
        path = write_session_cache(out, extractor, sess)
        index["sessions"][sess.id] = {"file": path.name, "segments": len(sess.segments)}
    extractor.verify()
    (out / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return index


def load_feature_dir(feature_dir, expected_hash=None):
    """Session id -> FeatureCache for a directory written by :func:`extract_to_dir`."""
    d = Path(feature_dir)
    try:
        index = json.loads((d / "index.json").read_text())
    except FileNotFoundError:
        raise MissingFile(f"no feature index at {d / 'index.json'}") from None
    if expected_hash is not None and index["checkpoint_hash"] != expected_hash:
        raise ChecksumError(f"features in {d} come from checkpoint {index['checkpoint_hash'][:12]}, not {expected_hash[:12]}")
    out = {}
    for sid, info in index["sessions"].items():
        try:
            cache = decode_cache((d / info["file"]).read_bytes())
        except FileNotFoundError:
            raise MissingFile(f"feature cache {d / info['file']} listed in index but missing") from None
        if cache.checkpoint_hash != index["checkpoint_hash"]:
            raise ChecksumError(f"{info['file']}: checkpoint hash differs from index")
        out[sid] = cache
    return out
