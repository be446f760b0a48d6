"""Reverse-mode autodiff, recurrent kernels, optimiser and checkpoints."""

from . import autograd as ag
from .autograd import Tensor, as_tensor, parameter
from .checkpoint import load as load_checkpoint, save as save_checkpoint
from .gradcheck import grad_check
from .kernels import BACKEND
from .optim import Adam, OptimizerState, adam_step, clip_grad_norm, xavier_uniform
from .recurrent import bidirectional_final, gru_final, lstm_final

__all__ = [
    "ag",
    "Tensor",
    "as_tensor",
    "parameter",
    "grad_check",
    "Adam",
    "OptimizerState",
    "adam_step",
    "clip_grad_norm",
    "xavier_uniform",
    "lstm_final",
    "gru_final",
    "bidirectional_final",
    "load_checkpoint",
    "save_checkpoint",
    "BACKEND",
]
