"""Method comparison on synthetic scenarios or on user-supplied patch recordings."""

from __future__ import annotations

import csv
import io as _io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .baselines import green_baseline, pca_aggregate
from .core import InputError, RgbSignal, SolverConfig, default_config
from .metrics import abs_pearson, estimate_hr, mae_bpm_detailed, snr_db, success_rate
from .pipeline import ExtractionResult, extract
from .synth import SynthScenario, generate_patches

METHODS = ("proposed", "green", "proposed+pca", "green+pca")
REPORT_COLUMNS = ("method", "snr_db", "mae_bpm", "sr_percent", "abs_r")


def parse_methods(text) -> List[str]:
    names = [m.strip() for m in (text.split(",") if isinstance(text, str) else text) if m.strip()]
    unknown = [m for m in names if m not in METHODS]
    if unknown:
        raise InputError(f"unknown method(s): {', '.join(unknown)}; choose from {', '.join(METHODS)}")
    if not names:
        raise InputError("no methods selected")
    return names


def extract_many(patches: Sequence[RgbSignal], cfg: SolverConfig, jobs: int = 1) -> List[ExtractionResult]:
    """Extract every patch; results keep the input order regardless of ``jobs``."""
    if jobs <= 1 or len(patches) <= 1:
        return [extract(p, cfg) for p in patches]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda p: extract(p, cfg), patches))


@dataclass
class Evaluation:
    """Metrics of one extracted signal against one ground-truth pulse."""

    snr_db: float
    hr_est: float
    hr_gt: float
    abs_r: float

    @property
    def hr_valid(self) -> bool:
        return bool(np.isfinite(self.hr_est))


def evaluate_signal(signal, gt_pulse, sample_rate_hz: float, gt_hr_bpm: Optional[float] = None) -> Evaluation:
    """SNR, HR and |r| of ``signal``; the reference HR defaults to the peak-interval HR of ``gt_pulse``."""
    if gt_hr_bpm is None:
        gt = estimate_hr(gt_pulse, sample_rate_hz)
        if not gt.valid:
            raise InputError("cannot estimate heart rate of the ground-truth signal")
        gt_hr_bpm = gt.bpm
    est = estimate_hr(signal, sample_rate_hz)
    try:
        r = abs_pearson(signal, gt_pulse)
    except InputError:
        r = float("nan")
    f0 = min(max(gt_hr_bpm / 60.0, 0.5), 4.0)
    return Evaluation(snr_db(signal, f0, sample_rate_hz), est.bpm if est.valid else float("nan"),
                      float(gt_hr_bpm), r)


@dataclass
class MethodRow:
    method: str
    evaluations: List[Evaluation] = field(default_factory=list)

    def summary(self, threshold_bpm: float) -> dict:
        est = [e.hr_est for e in self.evaluations]
        gt = [e.hr_gt for e in self.evaluations]
        mae = mae_bpm_detailed(est, gt)
        snrs = np.array([e.snr_db for e in self.evaluations])
        rs = np.array([e.abs_r for e in self.evaluations])
        return {
            "method": self.method,
            "snr_db": float(np.nanmean(snrs)) if np.isfinite(snrs).any() else float("nan"),
            "mae_bpm": mae.mae,
            "sr_percent": success_rate(est, gt, threshold_bpm),
            "abs_r": float(np.nanmean(rs)) if np.isfinite(rs).any() else float("nan"),
            "n": len(self.evaluations),
            "n_hr_excluded": mae.n_excluded,
        }


@dataclass
class BenchReport:
    rows: List[MethodRow]
    threshold_bpm: float
    sample_rate_hz: float
    frames: np.ndarray
    ground_truth: np.ndarray
    signals: Dict[str, np.ndarray]
    source: str

    def table(self) -> List[dict]:
        return [r.summary(self.threshold_bpm) for r in self.rows]

    def to_csv(self) -> str:
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in self.table():
            writer.writerow([row["method"]] + ["%.10g" % row[c] for c in REPORT_COLUMNS[1:]])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"source: {self.source}",
                 f"sample rate: {self.sample_rate_hz:g} Hz, success threshold: {self.threshold_bpm:g} bpm",
                 "",
                 f"{'method':<14}{'SNR [dB]':>10}{'MAE [bpm]':>11}{'SR [%]':>8}{'|r|':>7}{'n':>5}{'HR excl.':>10}"]
        for row in self.table():
            lines.append(f"{row['method']:<14}{row['snr_db']:>10.2f}{row['mae_bpm']:>11.2f}"
                         f"{row['sr_percent']:>8.1f}{row['abs_r']:>7.3f}{row['n']:>5d}{row['n_hr_excluded']:>10d}")
        return "\n".join(lines) + "\n"

    def write(self, report_path) -> List[Path]:
        """Write the metric CSV, a text summary and one signal CSV per method."""
        from .io import write_columns

        report_path = Path(report_path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(self.to_csv())
        written = [report_path]
        summary = report_path.with_suffix(".txt")
        summary.write_text(self.to_text())
        written.append(summary)
        for name, sig in self.signals.items():
            out = report_path.with_name(f"{report_path.stem}_{name.replace('+', '_')}.csv")
            write_columns(out, {"frame_index": self.frames, "rppg": sig, "ground_truth": self.ground_truth})
            written.append(out)
        return written


def _method_signals(methods, patches, cfg, jobs) -> Dict[str, List[np.ndarray]]:
    """Per method, the list of signals to score (one per patch, or one fused signal)."""
    out: Dict[str, List[np.ndarray]] = {}
    proposed = None
    if any(m.startswith("proposed") for m in methods):
        proposed = [r.y_full for r in extract_many(patches, cfg, jobs)]
    greens = [green_baseline(p, cfg.passband_hz) for p in patches]
    for m in methods:
        if m == "proposed":
            out[m] = proposed
        elif m == "green":
            out[m] = greens
        elif m == "proposed+pca":
            out[m] = [pca_aggregate(proposed)] if len(proposed) > 1 else [proposed[0]]
        elif m == "green+pca":
            out[m] = [pca_aggregate(greens)] if len(greens) > 1 else [greens[0]]
    return out


def run_patches(patches: Sequence[RgbSignal], gt_pulse, methods: Sequence[str],
                cfg: Optional[SolverConfig] = None, jobs: int = 1, source: str = "patches",
                gt_hr_bpm: Optional[float] = None) -> BenchReport:
    """Score each method on a set of patches from one recording.

    Single-patch methods are scored on every patch (per-patch averaging);
    ``+pca`` methods are scored once on the fused signal.
    """
    methods = parse_methods(methods)
    if not patches:
        raise InputError("no patches given")
    fs = patches[0].sample_rate_hz
    length = patches[0].length
    if any(p.length != length or p.sample_rate_hz != fs for p in patches):
        raise InputError("all patches must share length and sample rate")
    gt_pulse = np.asarray(gt_pulse, dtype=float)
    if gt_pulse.shape != (length,):
        raise InputError(f"ground truth has {gt_pulse.size} samples, patches have {length}")
    cfg = cfg or default_config(fs)
    sigs = _method_signals(methods, list(patches), cfg, jobs)
    rows = [MethodRow(m, [evaluate_signal(s, gt_pulse, fs, gt_hr_bpm) for s in sigs[m]]) for m in methods]
    return BenchReport(rows, cfg.sr_threshold_bpm, fs, np.arange(length), gt_pulse,
                       {m: sigs[m][0] for m in methods}, source)


def run_synthetic(scenario: SynthScenario, methods: Sequence[str], cfg: Optional[SolverConfig] = None,
                  runs: int = 1, jobs: int = 1, source: str = "desk-standard") -> BenchReport:
    """Benchmark over ``runs`` seeds starting at ``scenario.seed``; signals kept from the first run."""
    methods = parse_methods(methods)
    if runs < 1:
        raise InputError("runs must be at least 1")
    cfg = cfg or default_config(scenario.sample_rate_hz)
    needs_patches = any(m.endswith("+pca") for m in methods)
    merged: Optional[BenchReport] = None
    for k in range(runs):
        s = scenario.with_(seed=scenario.seed + k)
        patches, pulse, _ = generate_patches(s, s.patches if needs_patches else 1)
        rep = run_patches(patches, pulse, methods, cfg, jobs, source)
        if merged is None:
            merged = rep
        else:
            for acc, new in zip(merged.rows, rep.rows):
                acc.evaluations.extend(new.evaluations)
    merged.source = f"{source} (seeds {scenario.seed}..{scenario.seed + runs - 1})"
    return merged
