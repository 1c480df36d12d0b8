"""Matrix-free linear operators of the windowed separation model.

Each operator comes as a forward/adjoint pair:

* sliding window: full-length signal (L,) <-> stacked windows (tau*T,)
* block mixing: separation vectors (T, C) <-> stacked windows (tau*T,)
* per-window unitary DFT: stacked windows (tau*T,) <-> spectra (tau, T)
* difference of adjacent separation vectors: (T, C) <-> (T-1, C)

Stacked windows are laid out window by window, so entry ``t*tau + j`` is
sample ``t + j`` of window ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import InputError, TimeFreqBlocks, WindowPlan

SYMMETRY_TOL = 1e-6


def _as_vector(a, length: int, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.shape[0] != length:
        raise InputError(f"{what}: expected a vector of length {length}, got shape {a.shape}")
    return a


def window_forward(y_full, plan: WindowPlan) -> np.ndarray:
    y = _as_vector(y_full, plan.signal_length, "window_forward")
    return sliding_window_view(y, plan.window_size).reshape(-1).copy()


def _overlap_index(plan: WindowPlan) -> np.ndarray:
    t = np.arange(plan.window_count)[:, None]
    j = np.arange(plan.window_size)[None, :]
    return (t + j).reshape(-1)


def window_adjoint(y_windows, plan: WindowPlan) -> np.ndarray:
    """Overlap-add: every window entry is summed back onto the sample it came from."""
    y = _as_vector(y_windows, plan.window_size * plan.window_count, "window_adjoint")
    return np.bincount(_overlap_index(plan), weights=y, minlength=plan.signal_length)


@dataclass(frozen=True)
class BlockMixing:
    """The block-diagonal matrix of per-window colour traces.

    ``windows`` has shape (T, tau, C); ``windows[t]`` is the t-th window.
    """

    windows: np.ndarray

    def __post_init__(self):
        x = np.array(self.windows, dtype=float)
        if x.ndim != 3:
            raise InputError(f"windows must have shape (T, tau, C), got {x.shape}")
        x.setflags(write=False)
        object.__setattr__(self, "windows", x)

    @classmethod
    def from_samples(cls, samples, plan: WindowPlan, center: bool = True) -> "BlockMixing":
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] != plan.signal_length:
            raise InputError(
                f"samples must have {plan.signal_length} rows, got shape {samples.shape}"
            )
        # (T, C, tau) -> (T, tau, C)
        windows = sliding_window_view(samples, plan.window_size, axis=0).transpose(0, 2, 1)
        if center:
            windows = windows - windows.mean(axis=1, keepdims=True)
        return cls(windows)

    @property
    def window_count(self) -> int:
        return self.windows.shape[0]

    @property
    def tau(self) -> int:
        return self.windows.shape[1]

    @property
    def channels(self) -> int:
        return self.windows.shape[2]

    def gram(self) -> np.ndarray:
        """Per-window Gram matrices ``X_t^T X_t``, shape (T, C, C)."""
        return np.einsum("tjc,tjd->tcd", self.windows, self.windows)


def mixing_forward(m: BlockMixing, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (m.window_count, m.channels):
        raise InputError(f"w must have shape {(m.window_count, m.channels)}, got {w.shape}")
    return np.einsum("tjc,tc->tj", m.windows, w).reshape(-1)


def mixing_adjoint(m: BlockMixing, r) -> np.ndarray:
    r = _as_vector(r, m.window_count * m.tau, "mixing_adjoint")
    return np.einsum("tjc,tj->tc", m.windows, r.reshape(m.window_count, m.tau))


def stft_forward(y_windows, tau: int) -> TimeFreqBlocks:
    """Unitary DFT of every window; column ``t`` holds the spectrum of window ``t``."""
    y = np.asarray(y_windows, dtype=float)
    if y.ndim != 1 or tau < 1 or y.shape[0] % tau != 0 or y.shape[0] == 0:
        raise InputError(f"stacked windows of length {y.shape} are not divisible by tau={tau}")
    frames = y.reshape(-1, tau)
    return TimeFreqBlocks(np.fft.fft(frames, axis=1, norm="ortho").T)


def stft_adjoint(b: TimeFreqBlocks, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Inverse unitary DFT per window.

    The spectra must be conjugate-symmetric (to ``tol``, relative to their
    largest entry when that exceeds one); otherwise the time-domain windows
    would be complex and an :class:`InputError` is raised.
    """
    blocks = b.blocks
    scale = max(1.0, float(np.max(np.abs(blocks), initial=0.0)))
    err = b.symmetry_error()
    if err > tol * scale:
        raise InputError(f"spectra are not conjugate-symmetric (deviation {err:.3e})")
    frames = np.fft.ifft(blocks.T, axis=1, norm="ortho")
    return frames.real.reshape(-1)


def difference_forward(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise InputError(f"w must be 2-D, got shape {w.shape}")
    return w[:-1] - w[1:]


def difference_adjoint(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2:
        raise InputError(f"d must be 2-D, got shape {d.shape}")
    out = np.zeros((d.shape[0] + 1, d.shape[1]))
    out[:-1] += d
    out[1:] -= d
    return out
