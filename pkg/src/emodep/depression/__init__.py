"""Session-level depression detection, multi-seed protocol and late fusion."""

from .data import MODALITIES, Session, SessionInputs, audio_summary, build_inputs, load_sessions
from .models import SessionModel, SessionModelConfig, audio_session_model, emotion_session_model, text_session_model
from .protocol import ExperimentReport, aggregate, fuse_reports, multi_seed_protocol, vote_fusion
from .train import DepressionTrainConfig, SeedReport, f1_depressed, train_depression

__all__ = [
    "MODALITIES",
    "DepressionTrainConfig",
    "ExperimentReport",
    "SeedReport",
    "Session",
    "SessionInputs",
    "SessionModel",
    "SessionModelConfig",
    "aggregate",
    "audio_session_model",
    "audio_summary",
    "build_inputs",
    "emotion_session_model",
    "f1_depressed",
    "fuse_reports",
    "load_sessions",
    "multi_seed_protocol",
    "text_session_model",
    "train_depression",
    "vote_fusion",
]
