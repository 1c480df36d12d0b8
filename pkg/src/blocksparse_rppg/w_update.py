"""Separation-vector update on the product of unit spheres."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .core import InfeasibleStateError, InputError, SolverConfig, SolverError, UNIT_NORM_TOL
from .operators import BlockMixing

log = logging.getLogger(__name__)

ARMIJO = 1e-4
STATIONARITY_RTOL = 1e-5
MAX_HALVINGS = 60


def project_rows_to_sphere(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise InputError("cannot project a zero or non-finite row onto the unit sphere")
    return w / norms


@dataclass(frozen=True)
class WUpdateResult:
    w: np.ndarray
    objective: float
    initial_objective: float
    iterations: int
    converged: bool
    riemannian_grad_norm: float


class _Quadratic:
    """``||y - X w||^2 + beta ||D w||^2`` through per-window Gram matrices."""

    def __init__(self, m: BlockMixing, y_windows, beta: float):
        self.gram = m.gram()
        self.cross = ops.mixing_adjoint(m, y_windows)
        self.const = float(np.dot(y_windows, y_windows))
        self.beta = beta

    def value(self, w) -> float:
        qw = np.einsum("tcd,td->tc", self.gram, w)
        dw = ops.difference_forward(w)
        return float(np.sum(w * qw) - 2.0 * np.sum(w * self.cross) + self.const
                     + self.beta * np.sum(dw * dw))

    def gradient(self, w) -> np.ndarray:
        qw = np.einsum("tcd,td->tc", self.gram, w)
        smooth = ops.difference_adjoint(ops.difference_forward(w))
        return 2.0 * (qw - self.cross) + 2.0 * self.beta * smooth


def tangent_part(w, grad) -> np.ndarray:
    """Remove the radial component of ``grad`` row by row."""
    return grad - np.sum(grad * w, axis=1, keepdims=True) * w


def data_smoothness_objective(m: BlockMixing, y_windows, w, beta: float) -> float:
    r = np.asarray(y_windows, float) - ops.mixing_forward(m, w)
    dw = ops.difference_forward(w)
    return float(r @ r + beta * np.sum(dw * dw))


def update_w_detailed(m: BlockMixing, y_windows, w_init, cfg: SolverConfig) -> WUpdateResult:
    """Riemannian gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    Every accepted step satisfies the Armijo condition, so the objective never
    increases from ``w_init``.
    """
    w = np.array(w_init, dtype=float)
    if w.shape != (m.window_count, m.channels):
        raise InputError(f"w_init must have shape {(m.window_count, m.channels)}, got {w.shape}")
    if np.any(np.abs(np.linalg.norm(w, axis=1) - 1.0) > UNIT_NORM_TOL):
        raise InfeasibleStateError("w_init rows must have unit norm")
    y_windows = np.asarray(y_windows, dtype=float)
    if y_windows.shape != (m.window_count * m.tau,):
        raise InputError("y_windows length does not match the block mixing")
    w = project_rows_to_sphere(w)
    quad = _Quadratic(m, y_windows, cfg.beta)

    f = quad.value(w)
    f0 = f
    if not np.isfinite(f):
        raise SolverError("w-update objective is not finite")
    grad = quad.gradient(w)
    rgrad = tangent_part(w, grad)
    step = None
    converged = False
    it = 0
    rnorm = float(np.linalg.norm(rgrad))
    for it in range(1, cfg.w_max_iters + 1):
        rnorm = float(np.linalg.norm(rgrad))
        if rnorm <= STATIONARITY_RTOL * (1.0 + float(np.linalg.norm(grad))):
            converged = True
            it -= 1
            break
        if step is None:
            # inverse of a Lipschitz bound for the gradient
            lip = 2.0 * np.max(np.linalg.eigvalsh(quad.gram), initial=0.0) + 8.0 * cfg.beta
            step = 1.0 / max(lip, 1e-12)
        g2 = rnorm * rnorm
        trial = step
        accepted = False
        for _ in range(MAX_HALVINGS):
            w_new = project_rows_to_sphere(w - trial * rgrad)
            f_new = quad.value(w_new)
            if np.isfinite(f_new) and f_new <= f - ARMIJO * trial * g2:
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            log.debug("w-update line search failed at iteration %d", it)
            it -= 1
            break
        grad_new = quad.gradient(w_new)
        rgrad_new = tangent_part(w_new, grad_new)
        s = w_new - w
        yk = rgrad_new - rgrad
        sy = float(np.sum(s * yk))
        step = float(np.sum(s * s)) / sy if sy > 0 else trial * 2.0
        w, f, grad, rgrad = w_new, f_new, grad_new, rgrad_new
    else:
        rnorm = float(np.linalg.norm(rgrad))
        converged = rnorm <= STATIONARITY_RTOL * (1.0 + float(np.linalg.norm(grad)))

    if not np.isfinite(f):
        raise SolverError("w-update objective is not finite")
    return WUpdateResult(w, f, f0, it, converged, rnorm)


def update_w(m: BlockMixing, y_windows, w_init, cfg: SolverConfig) -> np.ndarray:
    return update_w_detailed(m, y_windows, w_init, cfg).w
