"""Multi-seed evaluation, per-modality reports and majority-vote fusion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidInput, IoError, SeedFailure
from ..references import reference_for
from .train import DepressionTrainConfig, SeedReport, f1_depressed, train_depression

REPORT_VERSION = 1


def aggregate(f1s):
    """MAX, AVG and population STD of per-seed F1 scores."""
    v = np.asarray(f1s, dtype=np.float64)
    if v.size == 0:
        raise InvalidInput("no seed scores to aggregate")
    return {"F1_MAX": float(v.max()), "F1_AVG": float(v.mean()), "F1_STD": float(v.std(ddof=0))}


@dataclass
class ExperimentReport:
    modality: str
    seeds: list  # SeedReport
    meta: dict = field(default_factory=dict)

    @property
    def f1s(self):
        return [s.f1 for s in self.seeds]

    @property
    def aggregates(self):
        return aggregate(self.f1s)

    @property
    def f1_max(self):
        return self.aggregates["F1_MAX"]

    @property
    def f1_avg(self):
        return self.aggregates["F1_AVG"]

    @property
    def f1_std(self):
        return self.aggregates["F1_STD"]

    def best_seed(self):
        """Seed report with the highest dev F1 (lowest seed on ties)."""
        return max(self.seeds, key=lambda s: (s.f1, -s.seed))

    def to_json(self):
        return {
            "report_version": REPORT_VERSION,
            "modality": self.modality,
            **self.aggregates,
            "seeds": [s.to_json() for s in self.seeds],
            "reference": reference_for(self.modality),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, d):
        return cls(modality=d["modality"], seeds=[SeedReport.from_json(s) for s in d["seeds"]], meta=d.get("meta", {}))

    def save(self, path):
        write_json(path, self.to_json())

    @classmethod
    def load(cls, path):
        return cls.from_json(read_json(path))


def multi_seed_protocol(modality, train, dev, n_seeds=20, config=DepressionTrainConfig(), trainer=None):
    """Train seeds ``0 .. n_seeds-1`` and aggregate their dev F1.

    ``trainer(modality, train, dev, seed, config) -> (model, SeedReport)``
    replaces :func:`train_depression` (used to inject fixed scores).
    """
    if n_seeds < 1:
        raise InvalidInput(f"n_seeds must be >= 1, got {n_seeds}")
    trainer = trainer or train_depression
    seeds, models = [], []
    for seed in range(n_seeds):
        try:
            model, rep = trainer(modality, train, dev, seed, config)
        except Exception as exc:
            raise SeedFailure(seed, exc) from exc
        seeds.append(rep)
        models.append(model)
    report = ExperimentReport(modality=modality, seeds=seeds, meta={"n_seeds": n_seeds, "train_config": config.to_dict()})
    return report, models


def vote_fusion(pred_audio, pred_text, pred_emotion):
    """Majority of three binary votes (elementwise for arrays)."""
    votes = np.asarray(pred_audio, dtype=int) + np.asarray(pred_text, dtype=int) + np.asarray(pred_emotion, dtype=int)
    out = (votes >= 2).astype(int)
    return int(out) if out.ndim == 0 else out


def fuse_reports(audio, text, emotion):
    """Majority-vote the best-dev-F1 seed of each modality, session by session."""
    reports = {"audio": audio, "text": text, "emotion": emotion}
    chosen = {m: r.best_seed() for m, r in reports.items()}
    ids = sorted(chosen["emotion"].predictions)
    for m, s in chosen.items():
        if sorted(s.predictions) != ids:
            raise InvalidInput(f"{m} report covers different sessions than the emotion report")
    sessions = {}
    for sid in ids:
        votes = {m: int(chosen[m].predictions[sid]["pred"]) for m in reports}
        labels = {int(chosen[m].predictions[sid]["label"]) for m in reports}
        if len(labels) != 1:
            raise InvalidInput(f"session {sid!r} carries different labels across reports")
        sessions[sid] = {**votes, "fused": vote_fusion(votes["audio"], votes["text"], votes["emotion"]), "label": labels.pop()}
    fused_f1 = f1_depressed([sessions[s]["fused"] for s in ids], [sessions[s]["label"] for s in ids])
    conflicts = [s for s in ids if len({sessions[s][m] for m in reports}) > 1]
    follows_emotion = sum(sessions[s]["fused"] == sessions[s]["emotion"] for s in conflicts)
    return {
        "report_version": REPORT_VERSION,
        "strategy": "majority vote over the best-dev-F1 seed per modality",
        "selected_seeds": {m: s.seed for m, s in chosen.items()},
        "modality_f1": {m: s.f1 for m, s in chosen.items()},
        "fused_f1": fused_f1,
        "sessions": sessions,
        "conflicts": {"count": len(conflicts), "fused_follows_emotion": int(follows_emotion)},
        "reference": reference_for("fused"),
    }


def write_json(path, obj):
    try:
        Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def read_json(path):
    from ..errors import MissingFile

    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise MissingFile(f"report not found: {path}") from None
