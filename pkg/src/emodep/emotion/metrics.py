"""Classification and regression scores used for emotion models."""

import numpy as np

from ..errors import InvalidInput, ShapeError


def _aligned(preds, labels):
    p, y = np.asarray(preds), np.asarray(labels)
    if p.shape[0] != y.shape[0]:
        raise ShapeError(f"{p.shape[0]} predictions vs {y.shape[0]} labels")
    return p, y


def weighted_accuracy(preds, labels):
    p, y = _aligned(preds, labels)
    return float(np.mean(p == y)) if y.size else 0.0


def unweighted_accuracy(preds, labels):
    """Mean of per-class recalls over the classes present in ``labels``."""
    p, y = _aligned(preds, labels)
    classes = np.unique(y)
    if classes.size == 0:
        return 0.0
    return float(np.mean([np.mean(p[y == c] == c) for c in classes]))


def binary_f1(preds, labels, positive=1):
    p, y = _aligned(preds, labels)
    tp = np.sum((p == positive) & (y == positive))
    fp = np.sum((p == positive) & (y != positive))
    fn = np.sum((p != positive) & (y == positive))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return float(2 * prec * rec / (prec + rec)) if prec + rec > 0 else 0.0


def eval_metrics(preds, labels, mode):
    """Scores for one prediction type.

    ``mode`` is ``"categorical"`` (class indices -> WA/UA), ``"attributes"``
    (``(N, 3)`` values -> per-attribute MAE) or ``"sentiment"`` (binary
    polarity -> Acc2 and positive-class F1).
    """
    if mode == "categorical":
        return {"WA": weighted_accuracy(preds, labels), "UA": unweighted_accuracy(preds, labels)}
    if mode == "attributes":
        p, y = _aligned(preds, labels)
        p = p.reshape(-1, 3)
        y = y.reshape(-1, 3)
        mae = np.abs(p - y).mean(axis=0) if y.size else np.zeros(3)
        return {"MAE_v": float(mae[0]), "MAE_a": float(mae[1]), "MAE_d": float(mae[2])}
    if mode == "sentiment":
        return {"Acc2": weighted_accuracy(preds, labels), "F1": binary_f1(preds, labels)}
    raise InvalidInput(f"unknown metric mode {mode!r}")
