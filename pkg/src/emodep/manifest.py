"""JSON-Lines dataset manifests and the per-utterance embedding file format.

The first line is a header ``{"schema_version": 1, "mode": ...}``; every
following line describes one segment.  Paths are relative to the manifest's
directory.  Embedding files are a little-endian u64 dimension followed by
that many little-endian float32 values.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DuplicateId, InvalidInput, IoError, LabelInconsistent, MissingFile, ShapeError
from .emotion.data import EMOTIONS, EmotionSegment, context_windows, normalize_label
from .frontend import FrontendConfig, extract_features, read_wav

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODES = ("iemocap", "mosei", "depression")
SPLITS = ("train", "dev")


@dataclass
class ManifestEntry:
    segment_id: str
    session_id: str
    split: str = "train"
    wav: Optional[str] = None
    embedding: Optional[str] = None
    label: Optional[str] = None
    attributes: Optional[list] = None
    sentiment: Optional[float] = None
    depression: Optional[int] = None

    def to_json(self):
        d = {"segment_id": self.segment_id, "session_id": self.session_id, "split": self.split}
        for key in ("wav", "embedding", "label", "attributes", "sentiment", "depression"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        return d


@dataclass
class Manifest:
    mode: str
    entries: list
    root: Path = field(default_factory=Path)
    schema_version: int = SCHEMA_VERSION

    def __len__(self):
        return len(self.entries)

    def path(self, rel):
        return None if rel is None else self.root / rel

    def sessions(self):
        """Session id -> entries, both in first-appearance order."""
        out = {}
        for e in self.entries:
            out.setdefault(e.session_id, []).append(e)
        return out

    def split(self, name):
        return [e for e in self.entries if e.split == name]


def _fail(cls, lineno, msg):
    raise cls(f"line {lineno}: {msg}")


def _parse_entry(raw, lineno, mode):
    if not isinstance(raw, dict):
        _fail(InvalidInput, lineno, "record must be a JSON object")
    for key in ("segment_id", "session_id"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            _fail(InvalidInput, lineno, f"field '{key}' missing or not a non-empty string")
    unknown = set(raw) - set(ManifestEntry.__dataclass_fields__)
    if unknown:
        _fail(InvalidInput, lineno, f"segment {raw['segment_id']!r}: unknown fields {sorted(unknown)}")
    e = ManifestEntry(**raw)
    if e.split not in SPLITS:
        _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: field 'split'={e.split!r} not in {SPLITS}")
    if e.wav is None and e.embedding is None:
        _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: needs at least one of 'wav' or 'embedding'")
    if e.label is not None:
        try:
            e.label = normalize_label(e.label)
        except Exception:
            _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: field 'label'={raw['label']!r} not in {EMOTIONS}")
    if mode == "iemocap":
        if e.label is None:
            _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: iemocap entry missing field 'label'")
        if e.attributes is None or len(e.attributes) != 3:
            _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: iemocap entry needs 'attributes' [v, a, d]")
        e.attributes = [float(a) for a in e.attributes]
        if not all(1.0 <= a <= 5.0 for a in e.attributes):
            _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: 'attributes' outside [1, 5]")
    elif mode == "mosei":
        if e.sentiment is None:
            _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: mosei entry missing field 'sentiment'")
        e.sentiment = float(e.sentiment)
        if not -3.0 <= e.sentiment <= 3.0:
            _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: 'sentiment' outside [-3, 3]")
    elif mode == "depression":
        if e.depression not in (0, 1):
            _fail(LabelInconsistent, lineno, f"segment {e.segment_id!r}: depression entry needs 'depression' 0 or 1")
    return e


def parse_manifest(lines, root=Path("."), check_files=True):
    root = Path(root)
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not lines:
        raise InvalidInput("manifest is empty (no header line)")
    lineno, first = lines[0]
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        _fail(InvalidInput, lineno, f"header is not JSON: {exc}")
    if header.get("schema_version") != SCHEMA_VERSION:
        _fail(InvalidInput, lineno, f"field 'schema_version'={header.get('schema_version')!r}, expected {SCHEMA_VERSION}")
    mode = header.get("mode")
    if mode not in MODES:
        _fail(InvalidInput, lineno, f"field 'mode'={mode!r} not in {MODES}")
    entries, seen, session_label = [], {}, {}
    dropped = 0
    for lineno, ln in lines[1:]:
        try:
            raw = json.loads(ln)
        except json.JSONDecodeError as exc:
            _fail(InvalidInput, lineno, f"not JSON: {exc}")
        e = _parse_entry(raw, lineno, mode)
        if e.segment_id in seen:
            _fail(DuplicateId, lineno, f"duplicate segment id {e.segment_id!r} (first on line {seen[e.segment_id]})")
        seen[e.segment_id] = lineno
        if e.depression is not None:
            prev = session_label.setdefault(e.session_id, (e.depression, lineno))
            if prev[0] != e.depression:
                _fail(
                    LabelInconsistent,
                    lineno,
                    f"session {e.session_id!r} has depression label {e.depression} but {prev[0]} on line {prev[1]}",
                )
        if check_files:
            for key in ("wav", "embedding"):
                rel = getattr(e, key)
                if rel is not None and not (root / rel).is_file():
                    _fail(MissingFile, lineno, f"segment {e.segment_id!r}: {key} file {str(root / rel)!r} does not exist")
        if mode == "mosei" and e.sentiment == 0.0:
            dropped += 1  # neutral scores carry no polarity
            continue
        entries.append(e)
    # contexts and session labels are built per session, so a session lives in one split
    splits = {}
    for e in entries:
        splits.setdefault(e.session_id, set()).add(e.split)
    mixed = sorted(s for s, v in splits.items() if len(v) > 1)
    if mixed:
        raise LabelInconsistent(f"sessions split across train/dev: {mixed}")
    if dropped:
        log.info("dropped %d mosei entries with sentiment 0", dropped)
    return Manifest(mode=mode, entries=entries, root=root, schema_version=SCHEMA_VERSION)


def load_manifest(path, check_files=True):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(f"manifest not found: {path}") from None
    return parse_manifest(text.splitlines(), root=path.parent, check_files=check_files)


def dumps_manifest(manifest):
    header = {"schema_version": manifest.schema_version, "mode": manifest.mode}
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(e.to_json(), sort_keys=True) for e in manifest.entries]
    return "\n".join(lines) + "\n"


def save_manifest(manifest, path):
    try:
        Path(path).write_text(dumps_manifest(manifest), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from None


# -- embedding files ---------------------------------------------------------


def write_embedding(path, vector):
    v = np.ascontiguousarray(np.asarray(vector, dtype="<f4").reshape(-1))
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", v.size))
        fh.write(v.tobytes())


def read_embedding(path):
    blob = Path(path).read_bytes()
    if len(blob) < 8:
        raise ShapeError(f"{path}: embedding file shorter than its 8-byte header")
    (dim,) = struct.unpack_from("<Q", blob)
    if len(blob) != 8 + 4 * dim:
        raise ShapeError(f"{path}: header says dim {dim} but payload holds {(len(blob) - 8) / 4:g} floats")
    return np.frombuffer(blob, dtype="<f4", offset=8).astype(np.float32)


# -- materialising segments --------------------------------------------------


def load_segments(manifest, frontend=FrontendConfig(), splits=SPLITS):
    """EmotionSegments per session, with text contexts built inside each session.

    Returns ``{session_id: [EmotionSegment, ...]}`` in manifest order.
    """
    out = {}
    for sid, entries in manifest.sessions().items():
        if entries[0].split not in splits:
            continue
        embs = None
        if all(e.embedding is not None for e in entries):
            embs = np.stack([read_embedding(manifest.path(e.embedding)) for e in entries])
            ctx = context_windows(embs)
        segs = []
        for i, e in enumerate(entries):
            audio = None
            if e.wav is not None:
                audio = extract_features(read_wav(manifest.path(e.wav), clip_id=e.segment_id), frontend).values.astype(np.float32)
            segs.append(
                EmotionSegment(
                    id=e.segment_id,
                    session_id=sid,
                    audio=audio,
                    context=None if embs is None else ctx[i],
                    embedding=None if embs is None else embs[i],
                    label=e.label,
                    attributes=None if e.attributes is None else tuple(e.attributes),
                    sentiment=e.sentiment,
                )
            )
        out[sid] = segs
    return out


def emotion_dataset(manifest, frontend=FrontendConfig()):
    from .emotion.data import EmotionDataset

    by_session = load_segments(manifest, frontend)
    split_of = {sid: entries[0].split for sid, entries in manifest.sessions().items()}
    train = [s for sid, segs in by_session.items() if split_of[sid] == "train" for s in segs]
    dev = [s for sid, segs in by_session.items() if split_of[sid] == "dev" for s in segs]
    return EmotionDataset(train=train, dev=dev)
