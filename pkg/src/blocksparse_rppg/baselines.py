"""Reference methods: band-passed green channel and PCA fusion of patches."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import InputError, RgbSignal


def fft_bandpass(signal, sample_rate_hz: float, band_hz=(0.7, 4.0)) -> np.ndarray:
    """Ideal band-pass: zero every full-length DFT bin outside the closed band."""
    signal = np.asarray(signal, dtype=float)
    low, high = band_hz
    nyquist = sample_rate_hz / 2.0
    if not 0 < low < high <= nyquist:
        raise InputError(f"band {band_hz} Hz must lie within (0, {nyquist}] Hz")
    spec = np.fft.rfft(signal)
    freqs = np.fft.rfftfreq(signal.size, d=1.0 / sample_rate_hz)
    spec[(freqs < low) | (freqs > high)] = 0.0
    return np.fft.irfft(spec, n=signal.size)


def green_baseline(x: RgbSignal, band_hz=(0.7, 4.0)) -> np.ndarray:
    if x.channels != 3:
        raise InputError(f"green baseline needs RGB input, got {x.channels} channels")
    green = x.samples[:, 1]
    return fft_bandpass(green - green.mean(), x.sample_rate_hz, band_hz)


def pca_aggregate(signals: Sequence) -> np.ndarray:
    """First principal component of standardised per-patch signals.

    The sign makes the result correlate non-negatively with the mean of the
    standardised inputs; if that mean vanishes, with the first input.
    """
    data = np.asarray([np.asarray(s, dtype=float) for s in signals])
    if data.ndim != 2 or data.shape[0] < 2:
        raise InputError("PCA aggregation needs at least two equal-length signals")
    if data.shape[1] < 2:
        raise InputError("signals must have at least two samples")
    centered = data - data.mean(axis=1, keepdims=True)
    std = centered.std(axis=1, keepdims=True)
    if np.all(std == 0):
        raise InputError("all signals are constant; principal component undefined")
    # constant patches carry no information; keep them as zero rows
    z = np.divide(centered, std, out=np.zeros_like(centered), where=std > 0)
    _, s, vt = np.linalg.svd(z, full_matrices=False)
    scores = s[0] * vt[0]
    ref = z.mean(axis=0)
    if np.linalg.norm(ref) <= 1e-12 * np.linalg.norm(z):
        ref = z[np.argmax(std[:, 0] > 0)]
    if scores @ ref < 0:
        scores = -scores
    return scores
