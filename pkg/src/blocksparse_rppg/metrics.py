"""Evaluation metrics: spectral SNR, peak-interval heart rate, MAE, success rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, periodogram

from .core import InputError

SNR_HALF_WIDTH_HZ = 0.1
SNR_RANGE_HZ = (0.5, 4.0)
MIN_HR_SECONDS = 5.0


@dataclass(frozen=True)
class HrEstimate:
    bpm: float
    peak_indices: np.ndarray
    mean_interval_s: float
    valid: bool = True

    @classmethod
    def invalid(cls, peaks=()) -> "HrEstimate":
        return cls(float("nan"), np.asarray(peaks, dtype=int), float("nan"), False)


def snr_masks(freqs, gt_fundamental_hz: float, half_width_hz: float = SNR_HALF_WIDTH_HZ,
              eval_range_hz=SNR_RANGE_HZ):
    """Boolean (signal, noise) masks over ``freqs`` for the SNR computation."""
    freqs = np.asarray(freqs)
    in_range = (freqs >= eval_range_hz[0]) & (freqs <= eval_range_hz[1])
    near = (np.abs(freqs - gt_fundamental_hz) <= half_width_hz) | \
        (np.abs(freqs - 2.0 * gt_fundamental_hz) <= half_width_hz)
    signal = in_range & near
    return signal, in_range & ~near


def snr_db(signal, gt_fundamental_hz: float, sample_rate_hz: float,
           half_width_hz: float = SNR_HALF_WIDTH_HZ, eval_range_hz=SNR_RANGE_HZ) -> float:
    """Power near the fundamental and second harmonic over the rest of the evaluation band, in dB.

    Returns ``nan`` when the signal has no power at all in the evaluation band.
    """
    signal = np.asarray(signal, dtype=float)
    if not SNR_RANGE_HZ[0] <= gt_fundamental_hz <= SNR_RANGE_HZ[1]:
        raise InputError(f"ground-truth fundamental {gt_fundamental_hz} Hz outside [0.5, 4] Hz")
    if signal.ndim != 1 or signal.size < 2 * sample_rate_hz:
        raise InputError("SNR needs at least two seconds of signal")
    freqs, power = periodogram(signal, fs=sample_rate_hz, window="boxcar", detrend="constant")
    sig_mask, noise_mask = snr_masks(freqs, gt_fundamental_hz, half_width_hz, eval_range_hz)
    if not sig_mask.any():
        raise InputError("no periodogram bin near the ground-truth frequency; use a longer signal")
    p_in = float(power[sig_mask].sum())
    p_out = float(power[noise_mask].sum())
    p_total = p_in + p_out
    if p_total <= 0:
        return float("nan")
    p_out = max(p_out, 1e-12 * p_total)
    if p_in <= 0:
        return float("-inf")
    return float(10.0 * np.log10(p_in / p_out))


def refine_peaks(signal, peaks) -> np.ndarray:
    """Sub-sample peak positions from a parabola through each peak and its two neighbours."""
    signal = np.asarray(signal, dtype=float)
    pos = np.asarray(peaks, dtype=float)
    inner = (peaks > 0) & (peaks < signal.size - 1)
    i = np.asarray(peaks)[inner]
    left, mid, right = signal[i - 1], signal[i], signal[i + 1]
    denom = left - 2.0 * mid + right
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom < 0, 0.5 * (left - right) / denom, 0.0)
    pos[inner] += np.clip(shift, -0.5, 0.5)
    return pos


def estimate_hr(signal, sample_rate_hz: float, min_peaks: int = 3) -> HrEstimate:
    """Heart rate from the mean peak-to-peak interval.

    Peaks are at least a quarter second apart (240 bpm) and must stand out by
    0.3 standard deviations; intervals use parabolically refined peak times.
    Fewer than ``min_peaks`` peaks, or a rate outside (0, 300) bpm, gives an
    invalid estimate.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1 or signal.size < MIN_HR_SECONDS * sample_rate_hz:
        raise InputError("heart-rate estimation needs at least five seconds of signal")
    std = float(np.std(signal))
    if not np.isfinite(std) or std == 0:
        return HrEstimate.invalid()
    peaks, _ = find_peaks(signal, distance=max(1.0, sample_rate_hz / 4.0), prominence=0.3 * std)
    if len(peaks) < min_peaks:
        return HrEstimate.invalid(peaks)
    interval = float(np.mean(np.diff(refine_peaks(signal, peaks)))) / sample_rate_hz
    bpm = 60.0 / interval
    return HrEstimate(bpm, peaks, interval, 0 < bpm < 300)


@dataclass(frozen=True)
class SlidingHr:
    times_s: np.ndarray
    bpm: np.ndarray
    valid: np.ndarray


def sliding_hr(signal, sample_rate_hz: float, window_s: float = 10.0, stride_s: float = 1.0) -> SlidingHr:
    """Peak-interval heart rate over sliding windows; ``times_s`` are window centres."""
    signal = np.asarray(signal, dtype=float)
    n = int(round(window_s * sample_rate_hz))
    hop = max(1, int(round(stride_s * sample_rate_hz)))
    if signal.size < n:
        raise InputError("signal shorter than one sliding heart-rate window")
    starts = range(0, signal.size - n + 1, hop)
    est = [estimate_hr(signal[s:s + n], sample_rate_hz) for s in starts]
    return SlidingHr(
        np.array([(s + n / 2) / sample_rate_hz for s in starts]),
        np.array([e.bpm for e in est]),
        np.array([e.valid for e in est]),
    )


def _pairs(estimates, ground_truth):
    est = np.asarray(estimates, dtype=float)
    gt = np.asarray(ground_truth, dtype=float)
    if est.shape != gt.shape or est.ndim != 1:
        raise InputError("estimates and ground truth must be 1-D and of equal length")
    if est.size == 0:
        raise InputError("no estimates given")
    return est, gt


@dataclass(frozen=True)
class MaeResult:
    mae: float
    n_used: int
    n_excluded: int


def mae_bpm_detailed(estimates, ground_truth) -> MaeResult:
    """MAE over valid pairs; NaN estimates mark invalid ones and are excluded."""
    est, gt = _pairs(estimates, ground_truth)
    ok = np.isfinite(est)
    mae = float(np.mean(np.abs(est[ok] - gt[ok]))) if ok.any() else float("nan")
    return MaeResult(mae, int(ok.sum()), int((~ok).sum()))


def mae_bpm(estimates, ground_truth) -> float:
    return mae_bpm_detailed(estimates, ground_truth).mae


def success_rate(estimates, ground_truth, threshold_bpm: float = 5.0) -> float:
    """Percentage of estimates within ``threshold_bpm``; NaN estimates count as failures."""
    if not threshold_bpm > 0:
        raise InputError("threshold must be positive")
    est, gt = _pairs(estimates, ground_truth)
    with np.errstate(invalid="ignore"):
        hit = np.abs(est - gt) <= threshold_bpm
    return float(100.0 * np.mean(hit & np.isfinite(est)))


def abs_pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise InputError("abs_pearson needs two 1-D sequences of equal length >= 2")
    a = a - a.mean()
    b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise InputError("abs_pearson is undefined for a constant sequence")
    return float(min(1.0, abs(a @ b) / (na * nb)))
