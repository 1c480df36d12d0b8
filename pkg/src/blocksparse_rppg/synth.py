"""Synthetic RGB traces with a known pulse, heart rate and mixing path."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from .core import InputError, RgbSignal

HR_LIMITS_BPM = (42.0, 240.0)
DRIFT_MAX_HZ = 0.3
DRIFT_COMPONENTS = 3

# normalised blood-volume-pulse colour signature, strongest in green
_PULSE_DIRECTION = (0.33, 0.77, 0.53)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def rotate_towards(start, towards, degrees: float) -> np.ndarray:
    """Rotate unit vector ``start`` by ``degrees`` in the plane spanned with ``towards``."""
    a = _unit(start)
    u = np.asarray(towards, float) - (np.dot(towards, a)) * a
    u = _unit(u)
    th = np.deg2rad(degrees)
    return np.cos(th) * a + np.sin(th) * u


def _desk_mixing() -> Tuple[Tuple[float, ...], ...]:
    start = _unit(_PULSE_DIRECTION)
    end = rotate_towards(start, (1.0, 0.0, 0.0), 20.0)
    return tuple(float(c) for c in start), tuple(float(c) for c in end)


@dataclass(frozen=True)
class SynthScenario:
    """Ground-truth description of one synthetic recording.

    Defaults describe the ``desk-standard`` scenario: 15 s at 30 fps, heart
    rate ramping 66 to 78 bpm, mixing rotating by 20 degrees, illumination
    drift three times and white noise once the pulse amplitude (the
    fundamental's amplitude, one intensity unit).
    """

    duration_s: float = 15.0
    sample_rate_hz: float = 30.0
    hr_trajectory_bpm: Tuple[float, ...] = (66.0, 78.0)
    pulse_harmonic_amplitudes: Tuple[float, ...] = (1.0, 0.4, 0.15)
    mixing_trajectory: Tuple[Tuple[float, ...], ...] = _desk_mixing()
    illumination_drift_amp: float = 3.0
    drift_direction: Tuple[float, ...] = (0.7, 0.55, 0.45)
    noise_std: float = 1.0
    seed: int = 0
    patches: int = 4

    def __post_init__(self):
        if not (self.duration_s > 0 and self.sample_rate_hz > 0):
            raise InputError("duration and sample rate must be positive")
        hr = np.asarray(self.hr_trajectory_bpm, dtype=float)
        if hr.ndim != 1 or hr.size < 1:
            raise InputError("heart-rate trajectory needs at least one control point")
        if np.any(hr < HR_LIMITS_BPM[0]) or np.any(hr > HR_LIMITS_BPM[1]):
            raise InputError(f"heart rate must stay within {HR_LIMITS_BPM} bpm")
        amps = np.asarray(self.pulse_harmonic_amplitudes, dtype=float)
        if amps.ndim != 1 or amps.size < 1 or np.any(amps < 0):
            raise InputError("harmonic amplitudes must be a non-empty non-negative sequence")
        mix = np.asarray(self.mixing_trajectory, dtype=float)
        if mix.ndim != 2 or mix.shape[0] < 1 or mix.shape[1] != 3:
            raise InputError("mixing trajectory must be a list of 3-vectors")
        if np.any(np.abs(np.linalg.norm(mix, axis=1) - 1.0) > 1e-6):
            raise InputError("mixing vectors must have unit norm")
        if np.asarray(self.drift_direction).shape != (3,) or not np.any(self.drift_direction):
            raise InputError("drift direction must be a non-zero 3-vector")
        if self.illumination_drift_amp < 0 or self.noise_std < 0:
            raise InputError("drift amplitude and noise level must be non-negative")
        if int(self.patches) != self.patches or self.patches < 1:
            raise InputError("patches must be a positive integer")
        if self.length < 2:
            raise InputError("scenario is shorter than two samples")

    @property
    def length(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    def with_(self, **changes) -> "SynthScenario":
        return replace(self, **changes)


DESK_STANDARD = SynthScenario()


def _control_curve(points, n: int) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.size == 1:
        return np.full(n, points[0])
    knots = np.linspace(0.0, 1.0, points.size)
    return np.interp(np.linspace(0.0, 1.0, n), knots, points)


def slerp(a, b, s) -> np.ndarray:
    """Spherical interpolation between unit vectors for parameters ``s`` in [0, 1]."""
    a, b = _unit(a), _unit(b)
    s = np.atleast_1d(np.asarray(s, dtype=float))[:, None]
    omega = np.arccos(np.clip(a @ b, -1.0, 1.0))
    if omega < 1e-12:
        return np.repeat(a[None, :], s.shape[0], axis=0)
    return (np.sin((1 - s) * omega) * a + np.sin(s * omega) * b) / np.sin(omega)


def mixing_path(control, n: int) -> np.ndarray:
    """Unit mixing vector per sample, slerped between equally spaced control points."""
    control = np.asarray(control, dtype=float)
    if control.shape[0] == 1:
        return np.repeat(_unit(control[0])[None, :], n, axis=0)
    pos = np.linspace(0.0, control.shape[0] - 1, n)
    seg = np.minimum(pos.astype(int), control.shape[0] - 2)
    out = np.empty((n, 3))
    for k in range(control.shape[0] - 1):
        sel = seg == k
        if sel.any():
            out[sel] = slerp(control[k], control[k + 1], pos[sel] - k)
    return out


def pulse_waveform(s: SynthScenario) -> Tuple[np.ndarray, np.ndarray]:
    """Harmonic pulse and its instantaneous heart rate (bpm) per sample."""
    n = s.length
    hr = _control_curve(s.hr_trajectory_bpm, n)
    freq = hr / 60.0
    dt = 1.0 / s.sample_rate_hz
    phase = np.concatenate([[0.0], np.cumsum(0.5 * (freq[1:] + freq[:-1]) * dt)])
    pulse = np.zeros(n)
    for h, amp in enumerate(s.pulse_harmonic_amplitudes, start=1):
        pulse += amp * np.sin(2.0 * np.pi * h * phase)
    return pulse, hr


def illumination_drift(s: SynthScenario, rng: np.random.Generator) -> np.ndarray:
    """Sum of a few slow sinusoids below 0.3 Hz, scaled to peak ``illumination_drift_amp``."""
    t = np.arange(s.length) / s.sample_rate_hz
    freqs = rng.uniform(0.02, DRIFT_MAX_HZ * 0.9, DRIFT_COMPONENTS)
    phases = rng.uniform(0.0, 2.0 * np.pi, DRIFT_COMPONENTS)
    weights = rng.uniform(0.5, 1.0, DRIFT_COMPONENTS)
    drift = (weights[:, None] * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None])).sum(axis=0)
    peak = np.max(np.abs(drift))
    if peak == 0 or s.illumination_drift_amp == 0:
        return np.zeros(s.length)
    return s.illumination_drift_amp * drift / peak


def _compose(s: SynthScenario, pulse, mixing, drift, rng) -> RgbSignal:
    rgb = pulse[:, None] * mixing + drift[:, None] * _unit(s.drift_direction)[None, :]
    if s.noise_std > 0:
        rgb = rgb + rng.normal(0.0, s.noise_std, rgb.shape)
    return RgbSignal(rgb, s.sample_rate_hz)


def generate(s: SynthScenario) -> Tuple[RgbSignal, np.ndarray, np.ndarray]:
    """One recording: ``(rgb, ground-truth pulse, ground-truth HR in bpm per sample)``."""
    rng = np.random.default_rng(s.seed)
    pulse, hr = pulse_waveform(s)
    drift = illumination_drift(s, rng)
    mixing = mixing_path(s.mixing_trajectory, s.length)
    return _compose(s, pulse, mixing, drift, rng), pulse, hr


def generate_patches(s: SynthScenario, count: int = None) -> Tuple[List[RgbSignal], np.ndarray, np.ndarray]:
    """Several patches of one face: shared pulse and illumination, own mixing tilt and noise.

    Patch 0 equals :func:`generate` for the same scenario.
    """
    count = s.patches if count is None else count
    first, pulse, hr = generate(s)
    drift = illumination_drift(s, np.random.default_rng(s.seed))
    patches = [first]
    for k in range(1, count):
        rng = np.random.default_rng([s.seed, k])
        tilt = rng.normal(0.0, 0.15, 3)
        control = [_unit(np.asarray(m) + tilt) for m in s.mixing_trajectory]
        gain = rng.uniform(0.7, 1.3)
        mixing = mixing_path(control, s.length)
        patches.append(_compose(s, pulse, mixing, gain * drift, rng))
    return patches, pulse, hr
