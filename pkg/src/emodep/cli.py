"""Command-line entry point (``emodep`` or ``python -m emodep``).

Every subcommand exits 0 on success.  Failures exit 1 and print a single
JSON object ``{"error": CODE, "message": ...}`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .errors import EmodepError, InvalidInput

log = logging.getLogger("emodep")

MODALITY_FLAGS = {"a": "A", "t": "T", "at": "A+T", "A": "A", "T": "T", "A+T": "A+T"}


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file; defaults are used for missing keys")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. --set emotion_training.epochs=5 (repeatable)")


def _config(args):
    from .config import load_config

    return load_config(getattr(args, "config", None), getattr(args, "overrides", ()))


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- subcommands -------------------------------------------------------------


def cmd_gen_synthetic(args):
    from .synthetic import corpus_hash, default_spec, gen_synthetic

    overrides = {}
    if args.margin is not None:
        overrides["margin"] = args.margin
    spec = default_spec(args.mode, seed=args.seed, **overrides)
    manifest = gen_synthetic(spec, args.out)
    _emit({"manifest": str(Path(args.out) / "manifest.jsonl"), "entries": len(manifest), "sha256": corpus_hash(args.out)})


def cmd_pretrain(args):
    from .config import dataclass_from
    from .emotion import EmotionConfig, TrainConfig, train_emotion
    from .frontend import FrontendConfig
    from .manifest import emotion_dataset, load_manifest

    cfg = _config(args)
    manifest = load_manifest(args.manifest)
    if manifest.mode != args.mode:
        raise InvalidInput(f"manifest mode is {manifest.mode!r} but --mode is {args.mode!r}")
    model_cfg = EmotionConfig.from_dict({**cfg["emotion_model"], "mode": args.mode, "modality": MODALITY_FLAGS[args.modality]})
    train_cfg = cfg["emotion_training"]
    for key in ("epochs", "patience", "target", "batch_size"):
        if getattr(args, key) is not None:
            train_cfg[key] = getattr(args, key)
    dataset = emotion_dataset(manifest, dataclass_from(FrontendConfig, cfg["frontend"]))
    model, metrics = train_emotion(dataset, model_cfg, dataclass_from(TrainConfig, train_cfg), seed=args.seed)
    model.save(args.out)
    metrics.pop("history")
    _emit({"checkpoint": str(args.out), "content_hash": model.content_hash(), "metrics": metrics})


def cmd_extract(args):
    from .depression import load_sessions
    from .manifest import load_manifest
    from .transfer import extract_to_dir, freeze

    extractor = freeze(args.ckpt)
    index = extract_to_dir(extractor, load_sessions(load_manifest(args.manifest)), args.out)
    _emit({"features": str(args.out), "sessions": len(index["sessions"]), "dim": index["dim"], "checkpoint_hash": index["checkpoint_hash"]})


def cmd_train_depression(args):
    from .config import dataclass_from
    from .depression import DepressionTrainConfig, build_inputs, load_sessions, multi_seed_protocol
    from .manifest import load_manifest
    from .transfer import load_feature_dir

    cfg = _config(args)
    sessions = load_sessions(load_manifest(args.manifest))
    features = None
    if args.modality == "emotion":
        if not args.features:
            raise InvalidInput("--features is required for the emotion modality")
        features = load_feature_dir(args.features)
    train = build_inputs(args.modality, [s for s in sessions if s.split == "train"], features)
    dev = build_inputs(args.modality, [s for s in sessions if s.split == "dev"], features)
    report, _ = multi_seed_protocol(args.modality, train, dev, args.seeds, dataclass_from(DepressionTrainConfig, cfg["depression"]["train"]))
    report.save(args.out)
    _emit({"report": str(args.out), **report.aggregates})


def cmd_fuse_eval(args):
    from .depression import ExperimentReport, fuse_reports
    from .depression.protocol import write_json

    audio, text, emotion = (ExperimentReport.load(p) for p in args.reports)
    fused = fuse_reports(audio, text, emotion)
    write_json(args.out, fused)
    _emit({"fused": str(args.out), "fused_f1": fused["fused_f1"], "modality_f1": fused["modality_f1"]})


def cmd_analyze(args):
    from .analysis import analyze_model, emit_report
    from .depression import load_sessions
    from .emotion import EmotionModel
    from .manifest import load_manifest

    model = EmotionModel.load(args.ckpt)
    rows = analyze_model(model, load_sessions(load_manifest(args.manifest)), per_session=args.per_session)
    written = emit_report(rows, args.out)
    _emit({"files": [str(p) for p in written], "rows": [r.to_json() for r in rows]})


def cmd_run_pipeline(args):
    from .config import load_config, smoke_config
    from .pipeline import run_pipeline

    cfg = load_config(args.config, args.overrides, base=smoke_config() if args.smoke else None)
    if args.out:
        cfg["run_dir"] = args.out
    t0 = time.time()
    prov = run_pipeline(cfg)
    _emit({"run_dir": cfg["run_dir"], "checkpoints": prov["checkpoints"], "seconds": round(time.time() - t0, 1)})


def cmd_gradcheck(args):
    from .checks import layer_gradchecks, model_gradcheck

    t0 = time.time()
    layers = {k: float(v) for k, v in layer_gradchecks(seed=args.seed).items()}
    full = {f"model_{m}": float(model_gradcheck(mode=m, frames=args.frames, coords=args.coords, seed=args.seed)) for m in ("iemocap", "mosei")}
    worst = max(list(layers.values()) + list(full.values()))
    _emit({"layers": layers, "models": full, "max_rel_error": worst, "tolerance": args.tol,
           "passed": bool(worst < args.tol), "seconds": round(time.time() - t0, 2)})
    if worst >= args.tol:
        raise InvalidInput(f"gradient check failed: max relative error {worst:.3g} >= {args.tol}")


# -- parser ------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="emodep", description="Emotion-to-depression transfer learning toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("gen-synthetic", help="write a synthetic corpus and its manifest")
    s.add_argument("--mode", required=True, choices=("iemocap", "mosei", "depression"), help="corpus type")
    s.add_argument("--seed", type=int, default=0, help="corpus seed (prototypes are shared across seeds)")
    s.add_argument("--margin", type=float, default=None, help="centroid separation in units of cluster radius")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_gen_synthetic)

    s = sub.add_parser("pretrain", help="train an emotion recogniser and save its checkpoint")
    s.add_argument("--mode", required=True, choices=("iemocap", "mosei"), help="task heads: 4-class+attributes or sentiment")
    s.add_argument("--modality", required=True, choices=("a", "t", "at"), help="audio, text, or both branches")
    s.add_argument("--manifest", required=True, help="manifest.jsonl of the emotion corpus")
    s.add_argument("--out", required=True, help="checkpoint path (a .json sidecar is written next to it)")
    s.add_argument("--seed", type=int, default=0, help="initialisation and shuffling seed")
    s.add_argument("--epochs", type=int, default=None, help="maximum epochs")
    s.add_argument("--patience", type=int, default=None, help="early-stopping patience in epochs")
    s.add_argument("--batch-size", dest="batch_size", type=int, default=None, help="segments per mini-batch")
    s.add_argument("--target", type=float, default=None, help="stop once the dev UA / Acc2 reaches this value")
    _add_config_flags(s)
    s.set_defaults(func=cmd_pretrain)

    s = sub.add_parser("extract", help="cache frozen-extractor features for depression sessions")
    s.add_argument("--ckpt", required=True, help="emotion checkpoint")
    s.add_argument("--manifest", required=True, help="depression manifest.jsonl")
    s.add_argument("--out", required=True, help="feature directory")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("train-depression", help="multi-seed training of one depression detector")
    s.add_argument("--modality", required=True, choices=("audio", "text", "emotion"), help="input modality")
    s.add_argument("--features", help="feature directory from 'extract' (emotion modality)")
    s.add_argument("--manifest", required=True, help="depression manifest.jsonl")
    s.add_argument("--seeds", type=int, default=20, help="number of seeds, run as 0..N-1")
    s.add_argument("--out", required=True, help="report JSON path")
    _add_config_flags(s)
    s.set_defaults(func=cmd_train_depression)

    s = sub.add_parser("fuse-eval", help="majority-vote the audio, text and emotion reports")
    s.add_argument("--reports", required=True, nargs=3, metavar=("AUDIO", "TEXT", "EMOTION"), help="three report JSON files")
    s.add_argument("--out", required=True, help="fused report JSON path")
    s.set_defaults(func=cmd_fuse_eval)

    s = sub.add_parser("analyze", help="group-averaged emotion content of depression sessions")
    s.add_argument("--ckpt", required=True, help="emotion checkpoint")
    s.add_argument("--manifest", required=True, help="depression manifest.jsonl")
    s.add_argument("--out", required=True, help="output directory for CSV and JSON")
    s.add_argument("--per-session", dest="per_session", action="store_true", help="average within sessions before groups")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("run-pipeline", help="run every stage end to end into one run directory")
    s.add_argument("--out", help="run directory (overrides run_dir)")
    s.add_argument("--smoke", action="store_true", help="start from the reduced smoke configuration")
    _add_config_flags(s)
    s.set_defaults(func=cmd_run_pipeline)

    s = sub.add_parser("gradcheck", help="finite-difference check of every layer and the full models")
    s.add_argument("--frames", type=int, default=20, help="audio frames of the model check")
    s.add_argument("--coords", type=int, default=4, help="entries checked per model parameter")
    s.add_argument("--seed", type=int, default=0, help="seed for inputs and coordinates")
    s.add_argument("--tol", type=float, default=1e-4, help="maximum accepted relative error")
    s.set_defaults(func=cmd_gradcheck)
    return p


def _error_json(exc):
    if isinstance(exc, EmodepError):
        return exc.to_dict()
    return {"error": type(exc).__name__, "message": str(exc)}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        args.func(args)
    except (EmodepError, OSError, ValueError, KeyError) as exc:
        sys.stderr.write(json.dumps(_error_json(exc), sort_keys=True) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
