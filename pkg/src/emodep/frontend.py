"""Log-mel filterbank front end: 40 FBKs + 40 deltas per 10 ms frame.

16 kHz mono 16-bit PCM in; 25 ms Hamming-windowed frames, 512-point DFT
magnitude, 40 HTK-mel triangular filters over 0-8000 Hz, natural log floored
at 1e-10.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySignal, ShapeError, WavFormatError

SAMPLE_RATE = 16000
FRAME_LENGTH = 400  # 25 ms
FRAME_SHIFT = 160  # 10 ms
N_FFT = 512
N_MELS = 40
LOG_FLOOR = 1e-10
DELTA_WINDOW = 2


@dataclass(frozen=True)
class FrontendConfig:
    n_mels: int = N_MELS
    n_fft: int = N_FFT
    low_hz: float = 0.0
    high_hz: float = SAMPLE_RATE / 2
    log_floor: float = LOG_FLOOR
    pre_emphasis: float = 0.0  # 0 disables
    mean_normalize: bool = False
    delta_window: int = DELTA_WINDOW


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16)
        if self.samples.ndim != 1:
            raise ShapeError(f"clip {self.id!r}: samples must be 1-D, got shape {self.samples.shape}")
        if self.sample_rate != SAMPLE_RATE:
            raise WavFormatError(f"clip {self.id!r}: sample_rate={self.sample_rate}, expected {SAMPLE_RATE}")


@dataclass
class FeatureMatrix:
    values: np.ndarray
    frame_shift_ms: float = 10.0
    frame_length_ms: float = 25.0
    source_id: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape


def num_frames(num_samples):
    if num_samples < FRAME_LENGTH:
        return 0
    return (num_samples - FRAME_LENGTH) // FRAME_SHIFT + 1


def frame_signal(clip):
    """``(T, 400)`` array whose row k holds samples ``[160k, 160k + 400)``."""
    x = clip.samples if isinstance(clip, AudioClip) else np.asarray(clip)
    n = num_frames(x.shape[0])
    if n == 0:
        raise EmptySignal(f"clip has {x.shape[0]} samples; at least {FRAME_LENGTH} are needed for one frame")
    starts = np.arange(n) * FRAME_SHIFT
    return x[starts[:, None] + np.arange(FRAME_LENGTH)[None, :]]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_centers(n_mels=N_MELS, low_hz=0.0, high_hz=SAMPLE_RATE / 2):
    """Centre frequencies (Hz) of the triangular filters."""
    pts = np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz), n_mels + 2)
    return mel_to_hz(pts[1:-1])


_FBANK_CACHE = {}


def mel_filterbank(n_mels=N_MELS, n_fft=N_FFT, low_hz=0.0, high_hz=SAMPLE_RATE / 2, sample_rate=SAMPLE_RATE):
    """``(n_mels, n_fft//2 + 1)`` triangles, peak 1, linear in mel between neighbours."""
    key = (n_mels, n_fft, low_hz, high_hz, sample_rate)
    if key not in _FBANK_CACHE:
        edges = np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz), n_mels + 2)
        bin_mel = hz_to_mel(np.arange(n_fft // 2 + 1) * sample_rate / n_fft)
        lo, ce, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
        up = (bin_mel[None, :] - lo) / (ce - lo)
        down = (hi - bin_mel[None, :]) / (hi - ce)
        fb = np.maximum(0.0, np.minimum(up, down))
        fb.setflags(write=False)
        _FBANK_CACHE[key] = fb
    return _FBANK_CACHE[key]


def _hamming(n):
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))


def _fbank_frames(frames, config):
    x = np.asarray(frames, dtype=np.float64) / 32768.0
    if config.pre_emphasis:
        x = np.concatenate([x[:, :1], x[:, 1:] - config.pre_emphasis * x[:, :-1]], axis=1)
    x = x * _hamming(x.shape[1])
    mag = np.abs(np.fft.rfft(x, n=config.n_fft, axis=1))
    fb = mel_filterbank(config.n_mels, config.n_fft, config.low_hz, config.high_hz)
    return np.log(np.maximum(mag @ fb.T, config.log_floor))


def log_mel_fbank(frame, config=FrontendConfig()):
    """40 log-mel energies of one 400-sample frame (float64)."""
    frame = np.asarray(frame)
    if frame.shape != (FRAME_LENGTH,):
        raise ShapeError(f"frame must have {FRAME_LENGTH} samples, got shape {frame.shape}")
    return _fbank_frames(frame[None, :], config)[0]


def delta(features, window=DELTA_WINDOW):
    """Regression deltas over +-``window`` frames with edge replication."""
    c = np.asarray(features, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1:
        raise ShapeError(f"delta expects a (T, D) matrix with T >= 1, got shape {c.shape}")
    t = c.shape[0]
    padded = np.concatenate([np.repeat(c[:1], window, axis=0), c, np.repeat(c[-1:], window, axis=0)])
    out = np.zeros_like(c)
    for n in range(1, window + 1):
        out += n * (padded[window + n:window + n + t] - padded[window - n:window - n + t])
    return out / (2.0 * sum(n * n for n in range(1, window + 1)))


def extract_features(clip, config=FrontendConfig()):
    """``(T, 80)`` FeatureMatrix: FBKs in columns 0-39, deltas in 40-79."""
    fbk = _fbank_frames(frame_signal(clip), config)
    if config.mean_normalize:
        fbk = fbk - fbk.mean(axis=0, keepdims=True)
    values = np.concatenate([fbk, delta(fbk, config.delta_window)], axis=1)
    return FeatureMatrix(values=values, source_id=getattr(clip, "id", ""))


def read_wav(path, clip_id=None):
    """Load a 16 kHz mono 16-bit PCM RIFF/WAVE file."""
    try:
        with wave.open(str(path), "rb") as w:
            channels, width, rate = w.getnchannels(), w.getsampwidth(), w.getframerate()
            comptype = w.getcomptype()
            if comptype != "NONE":
                raise WavFormatError(f"{path}: compression={comptype!r}, expected uncompressed PCM")
            if channels != 1:
                raise WavFormatError(f"{path}: num_channels={channels}, expected 1 (mono)")
            if width != 2:
                raise WavFormatError(f"{path}: bits_per_sample={8 * width}, expected 16")
            if rate != SAMPLE_RATE:
                raise WavFormatError(f"{path}: sample_rate={rate}, expected {SAMPLE_RATE}")
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        # the stdlib reports an unknown format tag as "unknown format: N"
        raise WavFormatError(f"{path}: audio_format field rejected ({exc}); only PCM (format 1) is supported") from None
    except EOFError:
        raise WavFormatError(f"{path}: truncated RIFF header") from None
    samples = np.frombuffer(raw, dtype="<i2").astype(np.int16)
    return AudioClip(samples=samples, sample_rate=rate, id=clip_id if clip_id is not None else str(path))


def write_wav(path, samples, sample_rate=SAMPLE_RATE):
    data = np.asarray(samples, dtype="<i2").tobytes()
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(data)
