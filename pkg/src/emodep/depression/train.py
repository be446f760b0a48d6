"""Binary cross-entropy training of a session classifier for one seed."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DegenerateSplit, InvalidInput, NonFiniteLoss, ShapeError
from ..tensor import ag
from ..tensor.optim import Adam, clip_grad_norm
from .data import MODALITIES, SessionInputs
from .models import CELL_FOR_MODALITY, SessionModel, SessionModelConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DepressionTrainConfig:
    epochs: int = 100
    patience: int = 20
    batch_size: int = 8
    lr: float = 1e-3
    clip_norm: float = 5.0
    hidden: int = 64
    threshold: float = 0.5

    def to_dict(self):
        return asdict(self)


@dataclass
class SeedReport:
    seed: int
    f1: float
    predictions: dict = field(default_factory=dict)  # session id -> {"prob", "pred", "label"}
    best_epoch: int = -1

    def recompute_f1(self):
        ids = sorted(self.predictions)
        return f1_depressed([self.predictions[i]["pred"] for i in ids], [self.predictions[i]["label"] for i in ids])

    def to_json(self):
        return {"seed": self.seed, "f1": self.f1, "best_epoch": self.best_epoch, "predictions": self.predictions}

    @classmethod
    def from_json(cls, d):
        return cls(seed=int(d["seed"]), f1=float(d["f1"]), predictions=d["predictions"], best_epoch=int(d.get("best_epoch", -1)))


def f1_depressed(preds, labels):
    """F1 of the depressed class (label 1); 0 when precision + recall is 0."""
    p = np.asarray(preds).astype(int)
    y = np.asarray(labels).astype(int)
    if p.shape != y.shape:
        raise ShapeError(f"{p.shape} predictions vs {y.shape} labels")
    tp = int(np.sum((p == 1) & (y == 1)))
    fp = int(np.sum((p == 1) & (y == 0)))
    fn = int(np.sum((p == 0) & (y == 1)))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0


def _check_split(train):
    counts = np.bincount(train.labels[train.labels >= 0], minlength=2)
    if counts.min() < 2:
        raise DegenerateSplit(f"training split needs >= 2 sessions per class, has {counts[1]} depressed / {counts[0]} healthy")


def _bce(model, inputs, idx):
    logits = model.logits([inputs.sequences[i] for i in idx])
    return ag.mean(ag.bce_with_logits(logits, inputs.labels[list(idx)].astype(np.float64)))


def _predict(model, inputs, threshold):
    probs = model.predict_proba(inputs.sequences)
    preds = (probs >= threshold).astype(int)
    return probs, preds


def train_depression(modality, train, dev, seed, config=DepressionTrainConfig()):
    """Train one seed; returns ``(model, SeedReport)`` with dev predictions of the kept epoch.

    Seeds drive initialisation and batch order only.  The epoch with the best
    dev F1 is kept (ties: lower dev loss); training stops after ``patience``
    epochs without improvement.
    """
    if modality not in MODALITIES:
        raise InvalidInput(f"unknown depression modality {modality!r}; expected one of {MODALITIES}")
    if not isinstance(train, SessionInputs) or not isinstance(dev, SessionInputs):
        raise TypeError("train and dev must be SessionInputs")
    _check_split(train)
    rng = np.random.default_rng(seed)
    cfg = SessionModelConfig(input_dim=train.dim, cell=CELL_FOR_MODALITY[modality], hidden=config.hidden)
    model = SessionModel.create(cfg, rng)
    model.fit_normalizer(train.sequences)
    opt = Adam(model.params, lr=config.lr)
    best = ((-1.0, -np.inf), None, -1)
    stale = 0
    dev_idx = np.arange(len(dev))
    for epoch in range(config.epochs):
        order = rng.permutation(len(train))
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            idx = order[start:start + config.batch_size]
            opt.zero_grad()
            loss = _bce(model, train, idx)
            if not np.isfinite(float(loss.data)):
                raise NonFiniteLoss(f"non-finite loss at epoch {epoch}, batch {b}")
            loss.backward()
            clip_grad_norm(model.params.values(), config.clip_norm)
            opt.step()
        _, preds = _predict(model, dev, config.threshold)
        f1 = f1_depressed(preds, dev.labels)
        dev_loss = float(_bce_nograd(model, dev, dev_idx))
        score = (f1, -dev_loss)
        if score > best[0]:
            best = (score, {n: a.copy() for n, a in model.arrays().items()}, epoch)
            stale = 0
        else:
            stale += 1
        if stale >= config.patience:
            break
    kept = SessionModel(cfg, best[1], mean=model.mean, std=model.std)
    probs, preds = _predict(kept, dev, config.threshold)
    predictions = {
        sid: {"prob": float(p), "pred": int(q), "label": int(y)} for sid, p, q, y in zip(dev.ids, probs, preds, dev.labels)
    }
    report = SeedReport(seed=int(seed), f1=f1_depressed(preds, dev.labels), predictions=predictions, best_epoch=best[2])
    log.info("%s seed %d: dev F1 %.3f (epoch %d)", modality, seed, report.f1, best[2])
    return kept, report


def _bce_nograd(model, inputs, idx):
    probs = np.clip(model.predict_proba([inputs.sequences[i] for i in idx]), 1e-12, 1 - 1e-12)
    y = inputs.labels[list(idx)]
    return -np.mean(y * np.log(probs) + (1 - y) * np.log(1 - probs))
