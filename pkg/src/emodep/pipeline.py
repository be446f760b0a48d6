"""End-to-end orchestration: pretrain, extract, train-depression, fuse-eval, analyze.

``run_pipeline(cfg)`` writes a run directory::

    data/<mode>/            synthetic corpora (when no manifest is given)
    checkpoints/<name>.ckpt emotion models (+ .json sidecars)
    features/               frozen-extractor caches of the depression sessions
    reports/                pretrain metrics, one report per modality, fused.json
    analysis/<name>/        group-averaged emotion content CSV + JSON
    provenance.json         config, seeds, corpus and checkpoint hashes

Stages left out of ``cfg["stages"]`` are skipped and their outputs are read
back from the run directory, so a partial rerun resumes from disk.  Any stage
failure is re-raised as :class:`StageError` carrying the stage name.
"""

from __future__ import annotations

import logging
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_model, emit_report
from .config import dataclass_from, dumps
from .depression import DepressionTrainConfig, ExperimentReport, build_inputs, fuse_reports, load_sessions, multi_seed_protocol
from .depression.protocol import read_json, write_json
from .emotion import EmotionConfig, EmotionModel, TrainConfig, train_emotion
from .errors import EmodepError, InvalidInput, MissingFile, StageError
from .frontend import FrontendConfig
from .manifest import emotion_dataset, load_manifest
from .synthetic import SyntheticSpec, corpus_hash, gen_synthetic
from .tensor import BACKEND
from .transfer import extract_to_dir, freeze, load_feature_dir

log = logging.getLogger(__name__)

STAGES = ("gen-synthetic", "pretrain", "extract", "train-depression", "fuse-eval", "analyze")


class Run:
    """Paths and lazily loaded shared state of one run directory."""

    def __init__(self, cfg, run_dir=None):
        self.cfg = cfg
        self.root = Path(run_dir or cfg["run_dir"])
        self.frontend = dataclass_from(FrontendConfig, cfg["frontend"])
        self._sessions = None
        self.provenance = {"package_version": __version__, "kernel_backend": BACKEND, "numpy": np.__version__,
                           "python": platform.python_version(), "config": cfg, "corpora": {}, "checkpoints": {}}

    def path(self, *parts):
        return self.root.joinpath(*parts)

    def manifest_path(self, mode):
        given = self.cfg["manifests"].get(mode)
        return Path(given) if given else self.path("data", mode, "manifest.jsonl")

    def checkpoint(self, name):
        return self.path("checkpoints", f"{name}.ckpt")

    def sessions(self):
        if self._sessions is None:
            self._sessions = load_sessions(load_manifest(self.manifest_path("depression")), self.frontend)
        return self._sessions

    def needed_modes(self):
        return sorted({p["mode"] for p in self.cfg["pretrain"]} | {"depression"})


def stage_gen_synthetic(run):
    for mode in run.needed_modes():
        if run.cfg["manifests"].get(mode):
            continue
        spec = dataclass_from(SyntheticSpec, run.cfg["synthetic"][mode])
        if spec.mode != mode:
            raise InvalidInput(f"synthetic.{mode}.mode is {spec.mode!r}")
        out = run.path("data", mode)
        gen_synthetic(spec, out)
        run.provenance["corpora"][mode] = {"seed": spec.seed, "sha256": corpus_hash(out)}


def stage_pretrain(run):
    train_cfg = dataclass_from(TrainConfig, run.cfg["emotion_training"])
    run.path("checkpoints").mkdir(parents=True, exist_ok=True)
    run.path("reports").mkdir(parents=True, exist_ok=True)
    for entry in run.cfg["pretrain"]:
        model_cfg = EmotionConfig.from_dict({**run.cfg["emotion_model"], "mode": entry["mode"], "modality": entry["modality"]})
        dataset = emotion_dataset(load_manifest(run.manifest_path(entry["mode"])), run.frontend)
        model, metrics = train_emotion(dataset, model_cfg, train_cfg, seed=int(entry["seed"]))
        model.save(run.checkpoint(entry["name"]))
        write_json(run.path("reports", f"pretrain_{entry['name']}.json"),
                   {"name": entry["name"], "seed": entry["seed"], "content_hash": model.content_hash(), "metrics": metrics})


def _load_checkpoint(run, name):
    path = run.checkpoint(name)
    if not path.is_file():
        raise MissingFile(f"checkpoint {path} not found; run the pretrain stage first")
    model = EmotionModel.load(path)
    run.provenance["checkpoints"][name] = model.content_hash()
    return model


def stage_extract(run):
    extractor = freeze(_load_checkpoint(run, run.cfg["feature_model"]))
    extract_to_dir(extractor, run.sessions(), run.path("features"))


def stage_train_depression(run):
    dcfg = run.cfg["depression"]
    train_cfg = dataclass_from(DepressionTrainConfig, dcfg["train"])
    sessions = run.sessions()
    features = None
    if "emotion" in dcfg["modalities"]:
        expected = EmotionModel.load(run.checkpoint(run.cfg["feature_model"])).content_hash() if run.checkpoint(
            run.cfg["feature_model"]).is_file() else None
        features = load_feature_dir(run.path("features"), expected_hash=expected)
    train = [s for s in sessions if s.split == "train"]
    dev = [s for s in sessions if s.split == "dev"]
    run.path("reports").mkdir(parents=True, exist_ok=True)
    for modality in dcfg["modalities"]:
        report, _ = multi_seed_protocol(
            modality, build_inputs(modality, train, features), build_inputs(modality, dev, features), int(dcfg["seeds"]), train_cfg
        )
        report.save(run.path("reports", f"{modality}.json"))


def stage_fuse_eval(run):
    reports = {m: ExperimentReport.load(run.path("reports", f"{m}.json")) for m in ("audio", "text", "emotion")}
    write_json(run.path("reports", "fused.json"), fuse_reports(reports["audio"], reports["text"], reports["emotion"]))


def stage_analyze(run):
    acfg = run.cfg["analysis"]
    sessions = [s for s in run.sessions() if s.split in acfg["splits"]]
    for name in acfg["models"]:
        rows = analyze_model(_load_checkpoint(run, name), sessions, per_session=bool(acfg["per_session"]))
        emit_report(rows, run.path("analysis", name))


STAGE_FUNCS = {
    "gen-synthetic": stage_gen_synthetic,
    "pretrain": stage_pretrain,
    "extract": stage_extract,
    "train-depression": stage_train_depression,
    "fuse-eval": stage_fuse_eval,
    "analyze": stage_analyze,
}


def run_pipeline(cfg, run_dir=None):
    """Execute the configured stages in order; returns the provenance dict."""
    run = Run(cfg, run_dir)
    unknown = [s for s in cfg["stages"] if s not in STAGES]
    if unknown:
        raise InvalidInput(f"unknown stages {unknown}; expected a subset of {STAGES}")
    run.root.mkdir(parents=True, exist_ok=True)
    for stage in STAGES:
        if stage not in cfg["stages"]:
            continue
        log.info("stage %s", stage)
        try:
            STAGE_FUNCS[stage](run)
        except EmodepError as exc:
            raise StageError(stage, exc) from exc
        except OSError as exc:
            raise StageError(stage, exc) from exc
    for name in {p["name"] for p in cfg["pretrain"]}:
        if name not in run.provenance["checkpoints"] and run.checkpoint(name).is_file():
            run.provenance["checkpoints"][name] = EmotionModel.load(run.checkpoint(name)).content_hash()
    run.provenance["checkpoints"] = dict(sorted(run.provenance["checkpoints"].items()))
    run.provenance["depression_seeds"] = list(range(int(cfg["depression"]["seeds"])))
    run.path("config.json").write_text(dumps(cfg))
    write_json(run.path("provenance.json"), run.provenance)
    return run.provenance


def report_values(run_dir):
    """Every JSON/CSV report of a run as ``{relative path: parsed content}`` (for comparisons)."""
    root = Path(run_dir)
    out = {}
    for p in sorted(root.joinpath("reports").glob("*.json")):
        out[str(p.relative_to(root))] = read_json(p)
    for p in sorted(root.joinpath("analysis").rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = p.read_text()
    return out
