"""Declarative run configuration: one JSON key-value tree with dotted overrides.

Every tunable default of the library appears in :func:`default_config`, so a
saved config fully describes a run.  ``apply_overrides(cfg, ["a.b=1"])``
parses the right-hand side as JSON when possible, else keeps it as a string.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, fields
from pathlib import Path

from .depression.train import DepressionTrainConfig
from .emotion.model import EmotionConfig
from .emotion.train import TrainConfig
from .errors import InvalidInput, MissingFile
from .frontend import FrontendConfig
from .synthetic import default_spec


def _emotion_model_defaults():
    d = EmotionConfig().to_dict()
    d.pop("mode", None)
    d.pop("modality", None)
    return d


def default_config():
    return {
        "run_dir": "run",
        "stages": ["gen-synthetic", "pretrain", "extract", "train-depression", "fuse-eval", "analyze"],
        "frontend": asdict(FrontendConfig()),
        "synthetic": {
            "iemocap": default_spec("iemocap", seed=0).to_dict(),
            "mosei": default_spec("mosei", seed=0).to_dict(),
            "depression": default_spec("depression", seed=0).to_dict(),
        },
        # manifest paths; null means "the synthetic corpus of that mode inside the run dir"
        "manifests": {"iemocap": None, "mosei": None, "depression": None},
        "pretrain": [
            {"name": "iemocap_at", "mode": "iemocap", "modality": "A+T", "seed": 0},
            {"name": "mosei_at", "mode": "mosei", "modality": "A+T", "seed": 0},
        ],
        "emotion_model": _emotion_model_defaults(),
        "emotion_training": TrainConfig().to_dict(),
        # which pretrained model supplies the emotion modality
        "feature_model": "mosei_at",
        "depression": {
            "seeds": 20,
            "modalities": ["audio", "text", "emotion"],
            "train": asdict(DepressionTrainConfig()),
        },
        "analysis": {"models": ["iemocap_at", "mosei_at"], "per_session": False, "splits": ["train", "dev"]},
    }


def smoke_config():
    """A reduced configuration that exercises every stage in a few minutes."""
    cfg = default_config()
    cfg["emotion_training"].update(epochs=3, target=0.95)
    cfg["depression"].update(seeds=3)
    cfg["depression"]["train"].update(epochs=30, patience=10)
    return cfg


def merge(base, update):
    """Recursive dict merge; ``update`` wins on leaves."""
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg, assignments):
    """Apply ``key.sub=value`` strings; list elements are addressed by index."""
    cfg = copy.deepcopy(cfg)
    for item in assignments or ():
        if "=" not in item:
            raise InvalidInput(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = cfg
        for p in parts[:-1]:
            node = node[int(p)] if isinstance(node, list) else node.setdefault(p, {})
            if not isinstance(node, (dict, list)):
                raise InvalidInput(f"override {key!r}: {p!r} is not a section")
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = _parse_value(raw)
        else:
            node[last] = _parse_value(raw)
    return cfg


def load_config(path=None, overrides=(), base=None):
    """``base`` (the defaults), merged with the JSON file at ``path`` (if any), then overrides."""
    cfg = default_config() if base is None else base
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise MissingFile(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"config {path} is not JSON: {exc}") from None
        cfg = merge(cfg, user)
    return apply_overrides(cfg, overrides)


def dataclass_from(cls, values):
    """Instantiate ``cls`` from a dict, rejecting unknown keys."""
    names = {f.name for f in fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise InvalidInput(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    return cls(**kw)


def dumps(cfg):
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
