"""Synthetic stand-ins for the licensed emotion and depression corpora.

Every emotion class owns a prototype shared by all corpora generated with the
same ``prototype_seed``: a sentence-embedding centroid and a set of tone
frequencies.  Centroids sit on scaled orthonormal directions so every pair is
``margin * within_std`` apart, where ``within_std`` is the RMS radius of a
class cluster.  Utterance audio is a jittered tone mixture plus white noise.

Depression sessions draw their utterances from group-specific emotion
mixtures, so a well-trained emotion model separates the two groups.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .emotion.data import EMBED_DIM, EMOTIONS
from .errors import InvalidSpec, IoError
from .frontend import SAMPLE_RATE, write_wav
from .manifest import Manifest, ManifestEntry, save_manifest, write_embedding

POLARITIES = ("negative", "positive")
TONES = {
    "angry": (620.0, 1750.0, 3100.0),
    "happy": (880.0, 2400.0, 4300.0),
    "sad": (240.0, 520.0, 900.0),
    "neutral": (410.0, 1150.0, 2050.0),
    "negative": (300.0, 700.0, 1500.0),
    "positive": (950.0, 2600.0, 5000.0),
}
ATTRIBUTE_MEANS = {
    "angry": (1.8, 4.2, 4.0),
    "happy": (4.2, 3.8, 3.4),
    "sad": (1.9, 1.8, 2.0),
    "neutral": (3.0, 2.6, 2.9),
}


@dataclass
class SyntheticSpec:
    mode: str = "iemocap"  # iemocap | mosei | depression
    seed: int = 0
    prototype_seed: int = 1234
    # per-class utterance counts (emotion modes) or per-group session counts (depression)
    train_counts: dict = field(default_factory=lambda: {c: 50 for c in EMOTIONS})
    dev_counts: dict = field(default_factory=lambda: {c: 20 for c in EMOTIONS})
    margin: float = 5.0
    within_std: float = 1.0
    embed_dim: int = EMBED_DIM
    utterance_seconds: tuple = (0.25, 0.4)
    dialogue_length: tuple = (4, 6)  # utterances per dialogue (emotion modes)
    session_length: tuple = (4, 8)  # utterances per session (depression)
    depressed_mixture: dict = field(default_factory=lambda: {"sad": 0.6, "angry": 0.4})
    healthy_mixture: dict = field(default_factory=lambda: {"neutral": 0.5, "happy": 0.5})
    tone_jitter: float = 0.03
    noise_level: float = 0.02

    def classes(self):
        return POLARITIES if self.mode == "mosei" else EMOTIONS

    def validate(self):
        if self.mode not in ("iemocap", "mosei", "depression"):
            raise InvalidSpec(f"mode {self.mode!r} not in iemocap/mosei/depression")
        if not self.margin > 0:
            raise InvalidSpec(f"margin must be > 0, got {self.margin}")
        groups = ("depressed", "healthy") if self.mode == "depression" else self.classes()
        for split, counts in (("train", self.train_counts), ("dev", self.dev_counts)):
            for g in groups:
                n = counts.get(g, 0)
                if split == "train" and n < 2:
                    raise InvalidSpec(f"train count for {g!r} is {n}; at least 2 required")
                if n < 0:
                    raise InvalidSpec(f"{split} count for {g!r} is negative")
            extra = set(counts) - set(groups)
            if extra:
                raise InvalidSpec(f"{split} counts name unknown groups {sorted(extra)}")
        lo, hi = self.utterance_seconds
        if lo * SAMPLE_RATE < 400 or hi < lo:
            raise InvalidSpec(f"utterance_seconds {self.utterance_seconds} must allow at least one 25 ms frame")
        if self.mode == "depression":
            for name, mix in (("depressed", self.depressed_mixture), ("healthy", self.healthy_mixture)):
                if not mix or any(c not in EMOTIONS or w < 0 for c, w in mix.items()) or sum(mix.values()) <= 0:
                    raise InvalidSpec(f"{name}_mixture {mix} must weight known emotions")

    def to_dict(self):
        return asdict(self)


def prototypes(spec):
    """Class -> (centroid, tone frequencies); depends only on prototype_seed, margin and dims."""
    rng = np.random.default_rng(spec.prototype_seed)
    names = list(EMOTIONS) + list(POLARITIES)
    q, _ = np.linalg.qr(rng.normal(size=(spec.embed_dim, len(names))))
    scale = spec.margin * spec.within_std / np.sqrt(2.0)
    return {n: (scale * q[:, i], np.array(TONES[n])) for i, n in enumerate(names)}


class _Writer:
    def __init__(self, spec, out_dir):
        self.spec = spec
        self.out = Path(out_dir)
        self.protos = prototypes(spec)
        self.rng = np.random.default_rng([spec.seed, spec.prototype_seed])
        self.entries = []
        try:
            (self.out / "wav").mkdir(parents=True, exist_ok=True)
            (self.out / "emb").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create output directory {self.out}: {exc}") from None

    def embedding(self, cls):
        centroid, _ = self.protos[cls]
        noise = self.rng.normal(size=centroid.shape) * (self.spec.within_std / np.sqrt(centroid.size))
        return centroid + noise

    def audio(self, cls):
        _, tones = self.protos[cls]
        lo, hi = self.spec.utterance_seconds
        n = int(self.rng.integers(int(lo * SAMPLE_RATE), int(hi * SAMPLE_RATE) + 1))
        t = np.arange(n) / SAMPLE_RATE
        x = np.zeros(n)
        for k, f in enumerate(tones):
            f = f * (1.0 + self.spec.tone_jitter * self.rng.uniform(-1, 1))
            x += (0.5 / (k + 1)) * np.sin(2 * np.pi * f * t + self.rng.uniform(0, 2 * np.pi))
        x = 0.3 * x / np.max(np.abs(x)) + self.spec.noise_level * self.rng.normal(size=n)
        return np.clip(np.round(x * 32767), -32768, 32767).astype(np.int16)

    def add(self, seg_id, session_id, split, cls, **labels):
        wav_rel = f"wav/{seg_id}.wav"
        emb_rel = f"emb/{seg_id}.f32"
        try:
            write_wav(self.out / wav_rel, self.audio(cls))
            write_embedding(self.out / emb_rel, self.embedding(cls))
        except OSError as exc:
            raise IoError(f"cannot write corpus files under {self.out}: {exc}") from None
        self.entries.append(ManifestEntry(segment_id=seg_id, session_id=session_id, split=split, wav=wav_rel, embedding=emb_rel, **labels))

    def labels_for(self, cls):
        if self.spec.mode == "mosei":
            mag = float(np.round(self.rng.uniform(0.5, 3.0), 3))
            return {"sentiment": mag if cls == "positive" else -mag}
        v, a, d = ATTRIBUTE_MEANS[cls]
        attrs = np.clip(np.array([v, a, d]) + 0.3 * self.rng.normal(size=3), 1.0, 5.0)
        return {"label": cls, "attributes": [float(np.round(x, 4)) for x in attrs]}


def _emotion_corpus(w, spec):
    for split, counts in (("train", spec.train_counts), ("dev", spec.dev_counts)):
        d = 0
        for cls in spec.classes():
            remaining = counts.get(cls, 0)
            while remaining > 0:
                n = min(remaining, int(w.rng.integers(spec.dialogue_length[0], spec.dialogue_length[1] + 1)))
                sid = f"{split}_dlg{d:04d}"
                for u in range(n):
                    w.add(f"{sid}_u{u:02d}", sid, split, cls, **w.labels_for(cls))
                remaining -= n
                d += 1


def _depression_corpus(w, spec):
    for split, counts in (("train", spec.train_counts), ("dev", spec.dev_counts)):
        k = 0
        for group, label in (("depressed", 1), ("healthy", 0)):
            mix = spec.depressed_mixture if label else spec.healthy_mixture
            classes = sorted(mix)
            probs = np.array([mix[c] for c in classes], dtype=float)
            probs /= probs.sum()
            for _ in range(counts.get(group, 0)):
                sid = f"{split}_sess{k:04d}"
                n = int(w.rng.integers(spec.session_length[0], spec.session_length[1] + 1))
                for u in range(n):
                    cls = classes[int(w.rng.choice(len(classes), p=probs))]
                    w.add(f"{sid}_u{u:02d}", sid, split, cls, label=cls, depression=label)
                k += 1


def gen_synthetic(spec, out_dir):
    """Write WAVs, embeddings and ``manifest.jsonl`` under ``out_dir``; returns the Manifest."""
    spec.validate()
    w = _Writer(spec, out_dir)
    if spec.mode == "depression":
        _depression_corpus(w, spec)
    else:
        _emotion_corpus(w, spec)
    manifest = Manifest(mode=spec.mode, entries=w.entries, root=Path(out_dir))
    save_manifest(manifest, Path(out_dir) / "manifest.jsonl")
    return manifest


def default_spec(mode, seed=0, **overrides):
    """The reference corpus sizes: 200/80 utterances for emotion modes, 40/16 sessions for depression."""
    if mode == "iemocap":
        base = dict(train_counts={c: 50 for c in EMOTIONS}, dev_counts={c: 20 for c in EMOTIONS})
    elif mode == "mosei":
        base = dict(train_counts={c: 100 for c in POLARITIES}, dev_counts={c: 40 for c in POLARITIES})
    elif mode == "depression":
        base = dict(train_counts={"depressed": 20, "healthy": 20}, dev_counts={"depressed": 8, "healthy": 8})
    else:
        raise InvalidSpec(f"mode {mode!r} not in iemocap/mosei/depression")
    base.update(overrides)
    return SyntheticSpec(mode=mode, seed=seed, **base)


def corpus_hash(out_dir):
    """SHA-256 over every file of a generated corpus (relative paths + bytes)."""
    root = Path(out_dir)
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()
