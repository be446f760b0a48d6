"""Group-averaged emotion content of depression sessions.

A trained emotion model scores every segment; outputs are averaged per group
(depressed / healthy) and over everything ("all").  By default each segment
is one sample; ``per_session=True`` averages within sessions first.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emotion.data import ATTRIBUTES, EMOTIONS
from .errors import EmptyGroup, InvalidInput, IoError, ModalityMismatch

GROUPS = ("depressed", "healthy")
POLARITY = ("negative", "positive")
CSV_FILES = {
    "categorical": "categorical_distribution.csv",
    "attributes": "attribute_profile.csv",
    "sentiment": "sentiment_profile.csv",
}
CSV_HEADER = ("group", "modality", "kind", "name", "mean", "sample_count")


@dataclass
class AnalysisRow:
    group: str
    modality: str
    sample_count: int
    categorical_means: list = None
    attribute_means: list = None
    sentiment_means: list = None  # (P(negative), P(positive))
    meta: dict = field(default_factory=dict)

    def to_json(self):
        d = {"group": self.group, "modality": self.modality, "sample_count": self.sample_count}
        for key in ("categorical_means", "attribute_means", "sentiment_means"):
            value = getattr(self, key)
            if value is not None:
                d[key] = [float(x) for x in value]
        return d


def depression_group(session):
    return "depressed" if session.label == 1 else "healthy"


def _model(model):
    return getattr(model, "model", model)


def _segment_outputs(model, sessions, fn):
    out = []
    for sess in sessions:
        out.append((sess, np.array([fn(model.predict(seg)) for seg in sess.segments], dtype=np.float64)))
    return out


def _grouped(model, sessions, group_fn, fn, per_session, groups):
    if not sessions:
        raise EmptyGroup("no sessions to analyse")
    scored = _segment_outputs(model, sessions, fn)
    buckets = {g: [] for g in groups}
    for sess, values in scored:
        g = group_fn(sess)
        rows = values.mean(axis=0, keepdims=True) if per_session else values
        buckets.setdefault(g, []).append(rows)
    result = []
    for g in list(groups) + [g for g in buckets if g not in groups]:
        if not buckets[g]:
            raise EmptyGroup(f"group {g!r} has no samples")
        stacked = np.concatenate(buckets[g])
        result.append((g, stacked.mean(axis=0), stacked.shape[0]))
    everything = np.concatenate([r for g in buckets for r in buckets[g]])
    result.append(("all", everything.mean(axis=0), everything.shape[0]))
    return result


def _softmax(z):
    e = np.exp(z - np.max(z))
    return e / e.sum()


def categorical_distribution(model, sessions, group_fn=depression_group, per_session=False, groups=GROUPS):
    """Mean class probabilities over the four categories per group."""
    m = _model(model)
    if m.cfg.mode != "iemocap":
        raise ModalityMismatch(f"categorical analysis needs an iemocap-mode model, got {m.cfg.mode}")
    rows = _grouped(m, sessions, group_fn, lambda p: _softmax(p.class_logits.astype(np.float64)), per_session, groups)
    return [AnalysisRow(g, m.cfg.modality, n, categorical_means=v.tolist()) for g, v, n in rows]


def attribute_profile(model, sessions, group_fn=depression_group, per_session=False, groups=GROUPS):
    """Mean (valence, activation, dominance) per group, each prediction clamped to [1, 5]."""
    m = _model(model)
    if m.cfg.mode != "iemocap":
        raise ModalityMismatch(f"attribute analysis needs an iemocap-mode model, got {m.cfg.mode}")
    rows = _grouped(m, sessions, group_fn, lambda p: np.clip(p.attributes.astype(np.float64), 1.0, 5.0), per_session, groups)
    return [AnalysisRow(g, m.cfg.modality, n, attribute_means=v.tolist()) for g, v, n in rows]


def sentiment_profile(model, sessions, group_fn=depression_group, per_session=False, groups=GROUPS):
    """Mean (P(negative), P(positive)) per group."""
    m = _model(model)
    if m.cfg.mode != "mosei":
        raise ModalityMismatch(f"sentiment analysis needs a mosei-mode model, got {m.cfg.mode}")

    def polarity(p):
        pos = 1.0 / (1.0 + np.exp(-float(p.sentiment_logit)))
        return np.array([1.0 - pos, pos])

    rows = _grouped(m, sessions, group_fn, polarity, per_session, groups)
    return [AnalysisRow(g, m.cfg.modality, n, sentiment_means=v.tolist()) for g, v, n in rows]


def analyze_model(model, sessions, per_session=False):
    """Every analysis applicable to the model's mode."""
    m = _model(model)
    if m.cfg.mode == "iemocap":
        return categorical_distribution(m, sessions, per_session=per_session) + attribute_profile(
            m, sessions, per_session=per_session
        )
    return sentiment_profile(m, sessions, per_session=per_session)


# -- serialisation -----------------------------------------------------------

_KINDS = (
    ("categorical", "categorical_means", EMOTIONS),
    ("attributes", "attribute_means", ATTRIBUTES),
    ("sentiment", "sentiment_means", POLARITY),
)


def _long_rows(rows, kind, attr, names):
    out = []
    for r in rows:
        values = getattr(r, attr)
        if values is None:
            continue
        for name, v in zip(names, values):
            out.append((r.group, r.modality, kind, name, repr(float(v)), str(r.sample_count)))
    return out


def render_csv(rows, kind):
    attr, names = {k: (a, n) for k, a, n in _KINDS}[kind]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(_long_rows(rows, kind, attr, names))
    return buf.getvalue()


def emit_report(tables, out_dir):
    """Write one long-format CSV per analysis kind present plus ``analysis.json``."""
    rows = list(tables)
    if not rows:
        raise InvalidInput("no analysis rows to emit")
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for kind, attr, _ in _KINDS:
            if any(getattr(r, attr) is not None for r in rows):
                path = out / CSV_FILES[kind]
                path.write_text(render_csv(rows, kind))
                written.append(path)
        combined = {"rows": [r.to_json() for r in rows], "columns": list(CSV_HEADER)}
        path = out / "analysis.json"
        path.write_text(json.dumps(combined, indent=2, sort_keys=True) + "\n")
        written.append(path)
    except OSError as exc:
        raise IoError(f"cannot write analysis report to {out}: {exc}") from None
    return written


def read_report_csv(path):
    """Parse a CSV written by :func:`emit_report` back into AnalysisRows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise InvalidInput(f"{path}: unexpected header {header}")
        grouped = {}
        for group, modality, kind, name, mean, count in reader:
            key = (group, modality, kind)
            grouped.setdefault(key, {"count": int(count), "values": []})["values"].append(float(mean))
    rows = []
    attr_of = {k: a for k, a, _ in _KINDS}
    for (group, modality, kind), info in grouped.items():
        row = AnalysisRow(group, modality, info["count"])
        setattr(row, attr_of[kind], info["values"])
        rows.append(row)
    return rows
