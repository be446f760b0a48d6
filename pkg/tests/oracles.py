"""Independent reference implementations used only by the tests.

These are written from the textbook definitions with explicit loops and no
code shared with the package.
"""

import math

import numpy as np

SR = 16000
NFFT = 512


def dft_magnitude(frame, n_fft=NFFT):
    """|X_k| for k = 0..n_fft/2 by the direct O(N^2) sum (zero padding implied)."""
    x = np.asarray(frame, dtype=np.float64)
    n = np.arange(x.size)
    out = np.empty(n_fft // 2 + 1)
    for k in range(n_fft // 2 + 1):
        ang = 2.0 * math.pi * k * n / n_fft
        re = float(np.sum(x * np.cos(ang)))
        im = -float(np.sum(x * np.sin(ang)))
        out[k] = math.hypot(re, im)
    return out


def hamming(n):
    return np.array([0.54 - 0.46 * math.cos(2.0 * math.pi * i / (n - 1)) for i in range(n)])


def htk_mel(f):
    return 2595.0 * math.log10(1.0 + f / 700.0)


def htk_hz(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def mel_table(n_mels=40, low=0.0, high=SR / 2):
    """(lower, centre, upper) edges in Hz of each triangle, tabulated one by one."""
    lo_m, hi_m = htk_mel(low), htk_mel(high)
    step = (hi_m - lo_m) / (n_mels + 1)
    return [(htk_hz(lo_m + i * step), htk_hz(lo_m + (i + 1) * step), htk_hz(lo_m + (i + 2) * step)) for i in range(n_mels)]


def filter_weight(bin_hz, edges):
    """Triangle weight of one DFT bin, linear in mel between the edges."""
    lo, ce, hi = (htk_mel(e) for e in edges)
    m = htk_mel(bin_hz)
    if m <= lo or m >= hi:
        return 0.0
    return (m - lo) / (ce - lo) if m <= ce else (hi - m) / (hi - ce)


def log_mel_reference(frame, n_mels=40, floor=1e-10):
    x = np.asarray(frame, dtype=np.float64) / 32768.0 * hamming(len(frame))
    mag = dft_magnitude(x)
    table = mel_table(n_mels)
    out = []
    for edges in table:
        e = sum(mag[k] * filter_weight(k * SR / NFFT, edges) for k in range(len(mag)))
        out.append(math.log(max(e, floor)))
    return np.array(out)


def population_std(values):
    mu = sum(values) / len(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


def nearest_centroid_accuracy(train_x, train_y, test_x, test_y):
    classes = sorted(set(train_y))
    cents = {c: np.mean([x for x, y in zip(train_x, train_y) if y == c], axis=0) for c in classes}
    hits = 0
    for x, y in zip(test_x, test_y):
        pred = min(classes, key=lambda c: float(np.sum((x - cents[c]) ** 2)))
        hits += pred == y
    return hits / len(test_y)


def one_nn_accuracy(train_x, train_y, test_x, test_y):
    tx = np.asarray(train_x)
    hits = 0
    for x, y in zip(test_x, test_y):
        hits += train_y[int(np.argmin(np.sum((tx - x) ** 2, axis=1)))] == y
    return hits / len(test_y)
