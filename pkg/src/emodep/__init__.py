"""Emotion-to-depression transfer learning."""

__version__ = "0.1.0"
