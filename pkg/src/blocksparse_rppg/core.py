"""Domain types, solver configuration and objective evaluation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

UNIT_NORM_TOL = 1e-6


class RppgError(Exception):
    """Base class for all package errors."""


class InputError(RppgError, ValueError):
    """Invalid input data, dimensions or configuration."""


class InfeasibleStateError(InputError):
    """A separation vector violates the unit-norm constraint."""


class SolverError(RppgError, RuntimeError):
    """Numerical failure inside a solver (divergence, non-finite values)."""


@dataclass(frozen=True)
class RgbSignal:
    """Per-frame averaged colour traces of one skin patch.

    ``samples`` has one row per frame and one column per channel (R, G, B).
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise InputError(f"samples must be a non-empty 2-D array, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InputError("samples contain non-finite values")
        if not (np.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise InputError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class WindowPlan:
    """Stride-one sliding windows of size ``window_size`` over ``signal_length`` samples."""

    window_size: int
    signal_length: int

    def __post_init__(self):
        if int(self.window_size) != self.window_size or self.window_size < 1:
            raise InputError(f"window size must be a positive integer, got {self.window_size}")
        if int(self.signal_length) != self.signal_length or self.signal_length < 1:
            raise InputError(f"signal length must be a positive integer, got {self.signal_length}")
        if self.signal_length < self.window_size:
            raise InputError(
                f"signal shorter than window: length {self.signal_length} < window {self.window_size}"
            )
        object.__setattr__(self, "window_size", int(self.window_size))
        object.__setattr__(self, "signal_length", int(self.signal_length))

    @property
    def window_count(self) -> int:
        return self.signal_length - self.window_size + 1

    @property
    def overlap_counts(self) -> np.ndarray:
        i = np.arange(self.signal_length)
        return np.minimum.reduce(
            [i + 1, np.full_like(i, self.window_size), np.full_like(i, self.window_count),
             self.signal_length - i]
        )


@dataclass(frozen=True)
class SeparationState:
    w: np.ndarray
    y_full: np.ndarray
    residual_objective: float = float("nan")

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        y = np.array(self.y_full, dtype=float)
        if w.ndim != 2:
            raise InputError(f"w must be a T x C matrix, got shape {w.shape}")
        if y.ndim != 1:
            raise InputError(f"y_full must be 1-D, got shape {y.shape}")
        w.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "y_full", y)

    def is_feasible(self, tol: float = UNIT_NORM_TOL) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.w, axis=1) - 1.0) <= tol))


@dataclass(frozen=True)
class TimeFreqBlocks:
    """Per-window spectra: row ``f`` is frequency bin ``f``, column ``t`` is window ``t``."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=complex)
        if b.ndim != 2:
            raise InputError(f"blocks must be 2-D, got shape {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def tau(self) -> int:
        return self.blocks.shape[0]

    @property
    def window_count(self) -> int:
        return self.blocks.shape[1]

    def block_norms(self) -> np.ndarray:
        return np.linalg.norm(self.blocks, axis=1)

    def symmetry_error(self) -> float:
        """Largest deviation from ``blocks[f] == conj(blocks[-f mod tau])``."""
        mirrored = np.roll(self.blocks[::-1], 1, axis=0)
        return float(np.max(np.abs(self.blocks - np.conj(mirrored)), initial=0.0))


def mirror_bins(tau: int) -> np.ndarray:
    """Physical bin index ``min(f, tau - f)`` for each of the ``tau`` DFT bins."""
    f = np.arange(tau)
    return np.minimum(f, (tau - f) % tau)


@dataclass(frozen=True)
class SolverConfig:
    """All tunables of the extraction.

    ``alpha`` holds one positive weight per DFT bin of a window and must be
    mirror-symmetric so the thresholded spectra stay conjugate-symmetric.
    """

    tau: int
    alpha: np.ndarray
    beta: float = 0.4
    gamma: float = 1.0
    passband_hz: Tuple[float, float] = (0.7, 4.0)
    outer_iters: int = 15
    admm_iters: int = 20
    cg_tol: float = 1e-10
    cg_max_iters: int = 200
    cg_precondition: bool = True
    w_solver_tol: float = 1e-8
    w_max_iters: int = 500
    sr_threshold_bpm: float = 5.0
    admm_early_stop: bool = False
    admm_tol: float = 1e-8
    outer_early_stop: bool = False
    outer_rtol: float = 1e-6

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        if int(self.tau) != self.tau or self.tau < 2:
            raise InputError(f"tau must be an integer >= 2, got {self.tau}")
        if alpha.shape != (self.tau,):
            raise InputError(f"alpha must have length tau={self.tau}, got shape {alpha.shape}")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
            raise InputError("alpha weights must be finite and positive")
        mirrored = alpha[(-np.arange(self.tau)) % self.tau]
        if not np.array_equal(alpha, mirrored):
            raise InputError("alpha must be mirror-symmetric: alpha[f] == alpha[(tau - f) % tau]")
        if not (self.beta >= 0 and np.isfinite(self.beta)):
            raise InputError(f"beta must be non-negative, got {self.beta}")
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise InputError(f"gamma must be positive, got {self.gamma}")
        low, high = self.passband_hz
        if not 0 <= low < high:
            raise InputError(f"invalid passband {self.passband_hz}")
        for name in ("outer_iters", "admm_iters", "cg_max_iters", "w_max_iters"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be non-negative")
        for name in ("cg_tol", "w_solver_tol", "sr_threshold_bpm", "admm_tol", "outer_rtol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        alpha.setflags(write=False)
        object.__setattr__(self, "tau", int(self.tau))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "passband_hz", (float(low), float(high)))

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


def passband_alpha(
    sample_rate_hz: float,
    tau: int,
    passband_hz: Tuple[float, float] = (0.7, 4.0),
    in_band: float = 0.1,
    out_band: float = 100.0,
) -> np.ndarray:
    """Weights that are ``in_band`` on bins whose centre frequency lies in the closed passband."""
    freqs = mirror_bins(tau) * (sample_rate_hz / tau)
    low, high = passband_hz
    # closed interval; the slack absorbs rounding in f * fs / tau
    eps = 1e-9 * max(1.0, high)
    inside = (freqs >= low - eps) & (freqs <= high + eps)
    return np.where(inside, in_band, out_band)


def default_config(sample_rate_hz: float, tau: int = 150, **overrides) -> SolverConfig:
    """Configuration with the published parameter values for a given frame rate."""
    if int(tau) != tau or tau < 2:
        raise InputError(f"tau must be an integer >= 2, got {tau}")
    if not (np.isfinite(sample_rate_hz) and sample_rate_hz > 0):
        raise InputError(f"sample rate must be positive, got {sample_rate_hz}")
    passband = overrides.pop("passband_hz", (0.7, 4.0))
    alpha = overrides.pop("alpha", None)
    if alpha is None:
        alpha = passband_alpha(sample_rate_hz, int(tau), passband)
    return SolverConfig(tau=int(tau), alpha=alpha, passband_hz=passband, **overrides)


def check_state(x: RgbSignal, state: SeparationState, tau: int) -> WindowPlan:
    plan = WindowPlan(tau, x.length)
    if state.y_full.shape != (x.length,):
        raise InputError(f"y_full has length {state.y_full.shape[0]}, expected {x.length}")
    if state.w.shape != (plan.window_count, x.channels):
        raise InputError(
            f"w has shape {state.w.shape}, expected {(plan.window_count, x.channels)}"
        )
    if not state.is_feasible(UNIT_NORM_TOL):
        raise InfeasibleStateError("separation vectors must have unit norm")
    return plan


def objective_terms(x: RgbSignal, state: SeparationState, cfg: SolverConfig,
                    mixing=None) -> dict:
    """The three terms of the joint objective, keyed ``data``, ``sparsity``, ``smoothness``."""
    from . import operators as ops
    from .pipeline import preprocess

    plan = check_state(x, state, cfg.tau)
    if mixing is None:
        mixing, _ = preprocess(x, cfg.tau)
    y_windows = ops.window_forward(state.y_full, plan)
    resid = y_windows - ops.mixing_forward(mixing, state.w)
    spectra = ops.stft_forward(y_windows, cfg.tau)
    dw = ops.difference_forward(state.w)
    return {
        "data": float(resid @ resid),
        "sparsity": float(cfg.alpha @ spectra.block_norms()),
        "smoothness": float(cfg.beta * np.sum(dw * dw)),
    }


def evaluate_objective(x: RgbSignal, state: SeparationState, cfg: SolverConfig,
                       mixing=None) -> float:
    """Joint objective of a feasible state; the unit-norm indicator counts as zero.

    ``mixing`` may carry a precomputed :class:`~blocksparse_rppg.operators.BlockMixing`
    for ``x`` to skip the preprocessing pass.
    """
    terms = objective_terms(x, state, cfg, mixing)
    value = terms["data"] + terms["sparsity"] + terms["smoothness"]
    if not np.isfinite(value):
        raise SolverError("objective is not finite")
    return value
