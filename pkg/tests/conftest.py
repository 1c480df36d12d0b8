import numpy as np
import pytest

from blocksparse_rppg.core import RgbSignal, SeparationState, WindowPlan, default_config


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unit_rows(rng, T, C=3):
    w = rng.normal(size=(T, C))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def random_instance(rng, L=20, tau=8, fs=30.0):
    """Small random signal, feasible state and config with random mirror-symmetric weights."""
    x = RgbSignal(rng.normal(size=(L, 3)) * 3 + 50, fs)
    plan = WindowPlan(tau, L)
    state = SeparationState(unit_rows(rng, plan.window_count), rng.normal(size=L))
    half = rng.uniform(0.05, 2.0, tau // 2 + 1)
    alpha = half[np.minimum(np.arange(tau), tau - np.arange(tau)) % tau]
    cfg = default_config(fs, tau, alpha=alpha, beta=float(rng.uniform(0, 2)))
    return x, state, cfg


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
