"""Losses, mini-batch training and evaluation for the emotion recogniser."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyDataset, LabelMissing, NonFiniteLoss
from ..tensor import ag
from ..tensor.optim import Adam, clip_grad_norm
from .data import EmotionDataset
from .metrics import eval_metrics
from .model import SMOOTH_HEADS, SPIKY_HEADS, EmotionModel, attention_penalty

log = logging.getLogger(__name__)


def huber_value(residual, delta=1.0):
    r = abs(float(residual))
    return 0.5 * r * r if r <= delta else delta * (r - 0.5 * delta)


def penalty_loss(out, cfg):
    total = None
    for _, a in out.attentions:
        p = attention_penalty(a, cfg.lambda_div, cfg.lambda_spiky, cfg.lambda_smooth)
        total = p if total is None else total + p
    return total


def multitask_loss(out, segment, cfg):
    """Cross-entropy on the category plus weighted Huber on the attributes plus attention penalties."""
    if segment.label is None or segment.attributes is None:
        raise LabelMissing(f"segment {segment.id!r} lacks the categorical label or attribute triple")
    ce = ag.cross_entropy(out.class_logits, segment.label_index)
    target = np.asarray(segment.attributes, dtype=out.attributes.dtype)
    attr = ag.sum(ag.huber(out.attributes - target, cfg.huber_delta))
    loss = ce + cfg.attr_weight * attr
    pen = penalty_loss(out, cfg)
    return loss if pen is None else loss + pen


def sentiment_loss(out, segment, cfg):
    """Binary cross-entropy on the sentiment polarity plus attention penalties."""
    if segment.sentiment is None:
        raise LabelMissing(f"segment {segment.id!r} lacks a sentiment score")
    target = np.array([1.0 if segment.sentiment > 0 else 0.0])
    loss = ag.sum(ag.bce_with_logits(out.sentiment_logit, target))
    pen = penalty_loss(out, cfg)
    return loss if pen is None else loss + pen


def segment_loss_from(out, segment, cfg):
    if cfg.mode == "iemocap":
        return multitask_loss(out, segment, cfg)
    return sentiment_loss(out, segment, cfg)


def segment_loss(model, segment):
    return segment_loss_from(model.forward(segment), segment, model.cfg)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 16
    lr: float = 1e-3
    patience: int = 10
    clip_norm: float = 0.0  # 0 disables
    target: float = None  # stop once the dev score reaches this value

    def to_dict(self):
        return asdict(self)


def evaluate(model, segments):
    """Metrics and mean loss for ``model`` on labelled ``segments``; no graph is retained."""
    preds, losses = [], []
    frozen = model.astype(model.dtype, trainable=False)
    for s in segments:
        out = frozen.forward(s)
        preds.append(out.to_prediction())
        losses.append(float(segment_loss_from(out, s, frozen.cfg).data))
    if model.cfg.mode == "iemocap":
        cls = np.array([int(np.argmax(p.class_logits)) for p in preds])
        labels = np.array([s.label_index for s in segments])
        metrics = eval_metrics(cls, labels, "categorical")
        attrs = np.array([p.attributes for p in preds]).reshape(-1, 3)
        gold = np.array([s.attributes for s in segments], dtype=float).reshape(-1, 3)
        metrics.update(eval_metrics(attrs, gold, "attributes"))
    else:
        pol = np.array([1 if p.sentiment_logit > 0 else 0 for p in preds])
        labels = np.array([1 if s.sentiment > 0 else 0 for s in segments])
        metrics = eval_metrics(pol, labels, "sentiment")
    metrics["loss"] = float(np.mean(losses))
    return metrics


def selection_score(metrics, mode):
    """Primary dev metric, ties broken by lower dev loss."""
    primary = metrics["UA"] if mode == "iemocap" else metrics["Acc2"]
    return (primary, -metrics["loss"])


def train_emotion(dataset, model_cfg, train_cfg=TrainConfig(), seed=0):
    """Train from scratch; returns ``(best_model, metrics)`` with dev metrics of the kept epoch.

    The dev split picks the epoch to keep; without a dev split the last epoch
    is kept and metrics are computed on the training split.
    """
    if not isinstance(dataset, EmotionDataset):
        dataset = EmotionDataset(*dataset)
    if not dataset.train:
        raise EmptyDataset("emotion training split is empty")
    rng = np.random.default_rng(seed)
    model = EmotionModel.create(model_cfg, seed=int(rng.integers(2**31)))
    for s in dataset.train + dataset.dev:
        model.check_segment(s)
    opt = Adam(model.params, lr=train_cfg.lr)
    held_out = dataset.dev or dataset.train
    best_score, best_arrays, best_epoch, stale = (-np.inf, -np.inf), None, -1, 0
    history = []
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(len(dataset.train))
        epoch_loss = 0.0
        for b, start in enumerate(range(0, len(order), train_cfg.batch_size)):
            batch = [dataset.train[i] for i in order[start:start + train_cfg.batch_size]]
            opt.zero_grad()
            total = None
            for seg in batch:
                loss = segment_loss(model, seg)
                total = loss if total is None else total + loss
            total = total * (1.0 / len(batch))
            value = float(total.data)
            if not np.isfinite(value):
                raise NonFiniteLoss(f"non-finite loss {value} at epoch {epoch}, batch {b}")
            total.backward()
            if train_cfg.clip_norm:
                clip_grad_norm(model.params.values(), train_cfg.clip_norm)
            opt.step()
            epoch_loss += value * len(batch)
        metrics = evaluate(model, held_out)
        score = selection_score(metrics, model_cfg.mode)
        history.append({"epoch": epoch, "loss": epoch_loss / len(order), **metrics})
        log.info("epoch %d loss %.4f dev %.4f (dev loss %.4f)", epoch, epoch_loss / len(order), score[0], metrics["loss"])
        if score > best_score:
            best_score, best_arrays, best_epoch, stale = score, {n: a.copy() for n, a in model.arrays().items()}, epoch, 0
        else:
            stale += 1
        if train_cfg.target is not None and score[0] >= train_cfg.target:
            break
        if stale >= train_cfg.patience:
            break
    best = EmotionModel(model_cfg, best_arrays)
    final = evaluate(best, held_out)
    best.meta = {"seed": seed, "training": train_cfg.to_dict(), "best_epoch": best_epoch}
    return best, {
        "split": "dev" if dataset.dev else "train",
        "best_epoch": best_epoch,
        "epochs_run": len(history),
        "history": history,
        **final,
    }


def attention_entropies(model, segments):
    """Mean row entropy of spiky and smooth heads over ``segments``."""
    spiky, smooth = [], []
    for s in segments:
        p = model.predict(s)
        for a in (p.audio_attention, p.text_attention):
            if a is None:
                continue
            ent = -(a * np.log(np.maximum(a, 1e-30))).sum(axis=1)
            spiky.extend(ent[list(SPIKY_HEADS)])
            smooth.extend(ent[list(SMOOTH_HEADS)])
    return float(np.mean(spiky)), float(np.mean(smooth))
