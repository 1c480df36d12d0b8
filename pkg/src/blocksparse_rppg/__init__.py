"""Block-sparse time-frequency extraction of remote pulse signals from RGB traces."""

from .core import (InfeasibleStateError, InputError, RgbSignal, RppgError, SeparationState,
                   SolverConfig, SolverError, TimeFreqBlocks, WindowPlan, default_config,
                   evaluate_objective)
from .pipeline import ExtractionResult, extract, init_w, preprocess

__all__ = [
    "ExtractionResult", "InfeasibleStateError", "InputError", "RgbSignal", "RppgError",
    "SeparationState", "SolverConfig", "SolverError", "TimeFreqBlocks", "WindowPlan",
    "default_config", "evaluate_objective", "extract", "init_w", "preprocess",
]

__version__ = "0.1.0"
