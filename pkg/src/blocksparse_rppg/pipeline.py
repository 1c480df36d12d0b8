"""End-to-end pulse extraction by alternating minimisation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import operators as ops
from .core import (InputError, RgbSignal, SeparationState, SolverConfig, SolverError,
                   WindowPlan, evaluate_objective)
from .operators import BlockMixing
from .prox_admm import AdmmState, admm_y_update, l21_objective
from .w_update import update_w_detailed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionResult:
    y_full: np.ndarray
    w: np.ndarray
    objective_trace: List[float]
    diagnostics: dict = field(default_factory=dict)

    @property
    def outer_iterations(self) -> int:
        return len(self.objective_trace)


def preprocess(x: RgbSignal, tau: int) -> Tuple[BlockMixing, WindowPlan]:
    """Cut ``x`` into stride-one windows and remove each window's per-channel mean."""
    plan = WindowPlan(tau, x.length)
    return BlockMixing.from_samples(x.samples, plan, center=True), plan


def init_w(plan: WindowPlan, channels: int = 3) -> np.ndarray:
    """Every window starts from the green channel."""
    if channels != 3:
        raise InputError(f"green-channel initialisation needs 3 channels, got {channels}")
    w = np.zeros((plan.window_count, 3))
    w[:, 1] = 1.0
    return w


def _least_squares_signal(windows, plan: WindowPlan) -> np.ndarray:
    """Full-length signal closest to a stack of (possibly inconsistent) windows."""
    return ops.window_adjoint(windows, plan) / plan.overlap_counts


def extract(x: RgbSignal, cfg: SolverConfig) -> ExtractionResult:
    """Jointly estimate the pulse signal and the per-window separation vectors.

    Each outer iteration runs the ADMM pulse update followed by the
    separation-vector update, and records the joint objective afterwards.
    """
    if cfg.tau > x.length:
        raise InputError(f"signal shorter than window: length {x.length} < tau {cfg.tau}")
    mixing, plan = preprocess(x, cfg.tau)
    w = init_w(plan, x.channels)
    x_mix = ops.mixing_forward(mixing, w)
    y = _least_squares_signal(x_mix, plan)
    admm_state = AdmmState.from_signal(y, plan)

    trace: List[float] = []
    primal: List[List[float]] = []
    dual: List[List[float]] = []
    w_iters: List[int] = []
    w_converged: List[bool] = []
    y_rejected: List[bool] = []
    for i in range(cfg.outer_iters):
        y_new, admm_state = admm_y_update(x_mix, plan, cfg, warm=admm_state, y0=y)
        primal.append(admm_state.primal_history)
        dual.append(admm_state.dual_history)
        # ADMM stops after a fixed number of steps; keep the previous signal if
        # the truncated iterate is worse on the pulse subproblem.
        rejected = l21_objective(y_new, x_mix, plan, cfg.alpha) > l21_objective(y, x_mix, plan, cfg.alpha)
        y_rejected.append(bool(rejected))
        if not rejected:
            y = y_new

        wres = update_w_detailed(mixing, ops.window_forward(y, plan), w, cfg)
        w = wres.w
        w_iters.append(wres.iterations)
        w_converged.append(wres.converged)
        x_mix = ops.mixing_forward(mixing, w)

        value = evaluate_objective(x, SeparationState(w, y), cfg, mixing=mixing)
        if not np.isfinite(value):
            raise SolverError(f"objective became non-finite at outer iteration {i + 1}")
        trace.append(value)
        log.debug("outer %d: objective %.6g, w iterations %d", i + 1, value, wres.iterations)
        if cfg.outer_early_stop and i > 0:
            prev = trace[-2]
            if abs(prev - value) <= cfg.outer_rtol * max(abs(prev), 1e-300):
                break

    diagnostics = {
        "admm_primal_residuals": primal,
        "admm_dual_residuals": dual,
        "w_iterations": w_iters,
        "w_converged": w_converged,
        "y_step_rejected": y_rejected,
    }
    return ExtractionResult(y, w, trace, diagnostics)
