"""Pretrained emotion recogniser: model, losses, training and metrics."""

from .data import ATTRIBUTES, EMOTIONS, EmotionDataset, EmotionSegment, context_windows, normalize_label
from .metrics import eval_metrics
from .model import (
    EmotionConfig,
    EmotionModel,
    Prediction,
    attention_penalty,
    parse_modality,
    res_tdnn_forward,
    self_attentive_pool,
    text_branch,
)
from .train import TrainConfig, attention_entropies, evaluate, multitask_loss, segment_loss, sentiment_loss, train_emotion

__all__ = [
    "ATTRIBUTES",
    "EMOTIONS",
    "EmotionConfig",
    "EmotionDataset",
    "EmotionModel",
    "EmotionSegment",
    "Prediction",
    "TrainConfig",
    "attention_entropies",
    "attention_penalty",
    "context_windows",
    "eval_metrics",
    "evaluate",
    "multitask_loss",
    "normalize_label",
    "parse_modality",
    "res_tdnn_forward",
    "segment_loss",
    "self_attentive_pool",
    "sentiment_loss",
    "text_branch",
    "train_emotion",
]
