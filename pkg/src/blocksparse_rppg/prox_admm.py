"""ADMM solver for the pulse-signal subproblem.

With the separation vectors fixed, the full-length signal minimises

    ||G y - x_mix||^2 + sum_f alpha_f ||[F G y]_f||_2

where ``x_mix`` are the mixed windows.  The splitting ``z = F G y`` leaves a
quadratic y-step (solved by conjugate gradients), a block soft-thresholding
z-step and a scaled dual update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import operators as ops
from .core import InputError, SolverConfig, SolverError, TimeFreqBlocks, WindowPlan

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmmState:
    z: TimeFreqBlocks
    v: TimeFreqBlocks
    iteration: int = 0
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    primal_history: List[float] = field(default_factory=list)
    dual_history: List[float] = field(default_factory=list)

    @classmethod
    def zeros(cls, plan: WindowPlan) -> "AdmmState":
        shape = (plan.window_size, plan.window_count)
        return cls(TimeFreqBlocks(np.zeros(shape, complex)), TimeFreqBlocks(np.zeros(shape, complex)))

    @classmethod
    def from_signal(cls, y_full, plan: WindowPlan) -> "AdmmState":
        """Consensus variable at the spectra of ``y_full``, zero dual."""
        z = ops.stft_forward(ops.window_forward(y_full, plan), plan.window_size)
        return cls(z, TimeFreqBlocks(np.zeros_like(z.blocks)))


def prox_weighted_l21(u: TimeFreqBlocks, gamma: float, alpha) -> TimeFreqBlocks:
    """Block soft-thresholding: each frequency row shrinks in norm by ``gamma * alpha_f``."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (u.tau,):
        raise InputError(f"alpha must have length {u.tau}, got shape {alpha.shape}")
    norms = u.block_norms()
    thresh = gamma * alpha
    scale = np.zeros_like(norms)
    keep = norms > thresh
    scale[keep] = 1.0 - thresh[keep] / norms[keep]
    return TimeFreqBlocks(u.blocks * scale[:, None])


@dataclass(frozen=True)
class CgResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool


def cg_solve(
    apply_A: Callable[[np.ndarray], np.ndarray],
    b,
    tol: float = 1e-10,
    max_iters: int = 200,
    x0=None,
    preconditioner: Optional[np.ndarray] = None,
) -> CgResult:
    """Conjugate gradients for a symmetric positive definite ``apply_A``.

    Stops once ``||A x - b|| <= tol * ||b||``.  ``preconditioner`` is an
    optional positive vector ``d`` used as the Jacobi preconditioner
    ``M^-1 = diag(1/d)``.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = float(np.linalg.norm(b))
    if not np.isfinite(bnorm):
        raise SolverError("conjugate gradients: right-hand side is not finite")
    target = tol * bnorm
    r = b - apply_A(x) if x0 is not None else b.copy()
    rnorm = float(np.linalg.norm(r))
    if rnorm <= target or bnorm == 0.0:
        return CgResult(x if bnorm else np.zeros_like(b), 0, 0.0 if not bnorm else rnorm, True)
    inv_diag = None if preconditioner is None else 1.0 / np.asarray(preconditioner, dtype=float)
    s = r if inv_diag is None else inv_diag * r
    p = s.copy()
    rs = float(r @ s)
    for k in range(1, max_iters + 1):
        ap = apply_A(p)
        curvature = float(p @ ap)
        if not np.isfinite(curvature) or curvature <= 0:
            raise SolverError(f"conjugate gradients diverged at iteration {k}")
        step = rs / curvature
        x += step * p
        r -= step * ap
        rnorm = float(np.linalg.norm(r))
        if not np.isfinite(rnorm):
            raise SolverError(f"conjugate gradients diverged at iteration {k}")
        if rnorm <= target:
            return CgResult(x, k, rnorm, True)
        s = r if inv_diag is None else inv_diag * r
        rs_new = float(r @ s)
        p = s + (rs_new / rs) * p
        rs = rs_new
    return CgResult(x, max_iters, rnorm, False)


def normal_matrix_diagonal(plan: WindowPlan, gamma: float) -> np.ndarray:
    """Diagonal of ``(2 + 1/gamma) G^T G``; G^T G is diagonal with the overlap counts."""
    return (2.0 + 1.0 / gamma) * plan.overlap_counts


def y_step_rhs(x_mix, z: TimeFreqBlocks, v: TimeFreqBlocks, plan: WindowPlan, gamma: float) -> np.ndarray:
    """Right-hand side ``2 G^T x_mix + (1/gamma) G^T F^H (z - v)`` of the y-step."""
    back = ops.stft_adjoint(TimeFreqBlocks(z.blocks - v.blocks))
    return ops.window_adjoint(2.0 * np.asarray(x_mix, float) + back / gamma, plan)


def y_step_objective(y_full, x_mix, z: TimeFreqBlocks, v: TimeFreqBlocks, plan: WindowPlan,
                     gamma: float) -> float:
    """``||G y - x_mix||^2 + ||F G y - z + v||^2 / (2 gamma)``."""
    gy = ops.window_forward(y_full, plan)
    r1 = gy - x_mix
    r2 = ops.stft_forward(gy, plan.window_size).blocks - z.blocks + v.blocks
    return float(r1 @ r1 + np.vdot(r2, r2).real / (2.0 * gamma))


def solve_y_step(x_mix, z: TimeFreqBlocks, v: TimeFreqBlocks, plan: WindowPlan, cfg: SolverConfig,
                 y0=None) -> CgResult:
    """Minimise the quadratic y-step by conjugate gradients on its normal equations."""
    coeff = 2.0 + 1.0 / cfg.gamma

    def apply_A(y):
        return coeff * ops.window_adjoint(ops.window_forward(y, plan), plan)

    rhs = y_step_rhs(x_mix, z, v, plan, cfg.gamma)
    precond = normal_matrix_diagonal(plan, cfg.gamma) if cfg.cg_precondition else None
    result = cg_solve(apply_A, rhs, cfg.cg_tol, cfg.cg_max_iters, x0=y0, preconditioner=precond)
    if not result.converged:
        log.debug("y-step CG stopped after %d iterations, residual %.3e",
                  result.iterations, result.residual_norm)
    return result


def solve_y_step_diagonal(x_mix, z: TimeFreqBlocks, v: TimeFreqBlocks, plan: WindowPlan,
                          gamma: float) -> np.ndarray:
    """Closed-form y-step; valid because the DFT is unitary and G^T G is diagonal."""
    return y_step_rhs(x_mix, z, v, plan, gamma) / normal_matrix_diagonal(plan, gamma)


def l21_objective(y_full, x_mix, plan: WindowPlan, alpha) -> float:
    """Pulse subproblem objective ``||G y - x_mix||^2 + sum_f alpha_f ||[F G y]_f||``."""
    gy = ops.window_forward(y_full, plan)
    r = gy - x_mix
    norms = ops.stft_forward(gy, plan.window_size).block_norms()
    return float(r @ r + np.asarray(alpha) @ norms)


def admm_y_update(x_mix, plan: WindowPlan, cfg: SolverConfig, warm: Optional[AdmmState] = None,
                  y0=None):
    """Run ``cfg.admm_iters`` ADMM iterations for the pulse signal.

    Returns ``(y_full, state)``.  ``warm`` carries (z, v) from a previous call;
    without it both start at zero.  ``y0`` only seeds the first CG solve.
    """
    x_mix = np.asarray(x_mix, dtype=float)
    n = plan.window_size * plan.window_count
    if x_mix.shape != (n,):
        raise InputError(f"x_mix must have length {n}, got shape {x_mix.shape}")
    state = warm if warm is not None else AdmmState.zeros(plan)
    if state.z.blocks.shape != (plan.window_size, plan.window_count):
        raise InputError("warm ADMM state does not match the window plan")
    z, v = state.z, state.v
    y = np.zeros(plan.signal_length) if y0 is None else np.array(y0, dtype=float)
    primal_hist: List[float] = []
    dual_hist: List[float] = []
    primal = dual = float("nan")
    for k in range(cfg.admm_iters):
        y = solve_y_step(x_mix, z, v, plan, cfg, y0=y).x
        fgy = ops.stft_forward(ops.window_forward(y, plan), plan.window_size).blocks
        z_new = prox_weighted_l21(TimeFreqBlocks(fgy + v.blocks), cfg.gamma, cfg.alpha)
        v = TimeFreqBlocks(v.blocks + fgy - z_new.blocks)
        primal = float(np.linalg.norm(fgy - z_new.blocks))
        dual = float(np.linalg.norm(z_new.blocks - z.blocks)) / cfg.gamma
        z = z_new
        primal_hist.append(primal)
        dual_hist.append(dual)
        if not (np.isfinite(primal) and np.isfinite(dual)):
            raise SolverError(f"ADMM produced non-finite residuals at iteration {k + 1}")
        if cfg.admm_early_stop and max(primal, dual) <= cfg.admm_tol * max(1.0, np.linalg.norm(fgy)):
            break
    out = AdmmState(z, v, state.iteration + len(primal_hist), primal, dual, primal_hist, dual_hist)
    return y, out
