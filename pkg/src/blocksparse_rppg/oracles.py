"""Dense matrix assemblies of the model operators.

These build every operator as an explicit matrix and are meant for small
verification problems only; the solvers never use them.
"""

from __future__ import annotations

import numpy as np

from .core import InputError, RgbSignal, SeparationState, SolverConfig, WindowPlan

MAX_STACKED = 5000


def _guard(plan: WindowPlan):
    size = plan.window_size * plan.window_count
    if size > MAX_STACKED:
        raise InputError(f"dense oracle limited to tau*T <= {MAX_STACKED}, got {size}")


def dense_window_matrix(plan: WindowPlan) -> np.ndarray:
    """Stacked shifted identities, shape (tau*T, L)."""
    _guard(plan)
    tau, T, L = plan.window_size, plan.window_count, plan.signal_length
    G = np.zeros((tau * T, L))
    for t in range(T):
        G[t * tau:(t + 1) * tau, t:t + tau] = np.eye(tau)
    return G


def dense_mixing_matrix(windows) -> np.ndarray:
    """Block-diagonal matrix of the (tau, C) windows, shape (tau*T, C*T)."""
    windows = np.asarray(windows, dtype=float)
    T, tau, C = windows.shape
    X = np.zeros((tau * T, C * T))
    for t in range(T):
        X[t * tau:(t + 1) * tau, t * C:(t + 1) * C] = windows[t]
    return X


def dense_dft_matrix(tau: int) -> np.ndarray:
    """Unitary DFT matrix written out from its definition."""
    j = np.arange(tau)
    return np.exp(-2j * np.pi * np.outer(j, j) / tau) / np.sqrt(tau)


def dense_stft_matrix(tau: int, T: int) -> np.ndarray:
    return np.kron(np.eye(T), dense_dft_matrix(tau))


def dense_difference_matrix(T: int, C: int = 3) -> np.ndarray:
    """Rows ``+I`` then ``-I`` acting on consecutive separation vectors, shape (C(T-1), CT)."""
    D = np.zeros((C * max(T - 1, 0), C * T))
    for t in range(T - 1):
        D[t * C:(t + 1) * C, t * C:(t + 1) * C] = np.eye(C)
        D[t * C:(t + 1) * C, (t + 1) * C:(t + 2) * C] = -np.eye(C)
    return D


def dense_raw_windows(samples, plan: WindowPlan, center: bool = True) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    tau = plan.window_size
    out = np.stack([samples[t:t + tau] for t in range(plan.window_count)])
    if center:
        out = out - out.mean(axis=1, keepdims=True)
    return out


def dense_oracle_objective(x: RgbSignal, state: SeparationState, cfg: SolverConfig) -> float:
    """Joint objective assembled from explicit matrices (indicator term taken as zero)."""
    plan = WindowPlan(cfg.tau, x.length)
    _guard(plan)
    T, tau, C = plan.window_count, plan.window_size, x.channels
    G = dense_window_matrix(plan)
    X = dense_mixing_matrix(dense_raw_windows(x.samples, plan))
    F = dense_stft_matrix(tau, T)
    D = dense_difference_matrix(T, C)
    y = np.asarray(state.y_full, dtype=float)
    w = np.asarray(state.w, dtype=float).reshape(-1)
    data = np.sum((G @ y - X @ w) ** 2)
    spectra = (F @ (G @ y)).reshape(T, tau)
    sparsity = sum(cfg.alpha[f] * np.linalg.norm(spectra[:, f]) for f in range(tau))
    smooth = cfg.beta * np.sum((D @ w) ** 2)
    return float(data + sparsity + smooth)
