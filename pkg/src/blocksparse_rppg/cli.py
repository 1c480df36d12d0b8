"""Command-line entry point: ``extract``, ``bench``, ``metrics`` and ``synth``.

Exit status is 0 on success, 2 for invalid input and 3 when a solver fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import bench
from .baselines import pca_aggregate
from .core import InputError, RgbSignal, SolverError
from .io import (load_config, load_scenario, read_rgb_csv, read_signal_csv, write_columns,
                 write_diagnostics, write_rgb_csv, write_signal_csv)
from .metrics import estimate_hr, snr_db, success_rate
from .synth import generate_patches

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
LENGTH_TOLERANCE = 0.01

log = logging.getLogger("blocksparse_rppg")


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".diagnostics.json")


def _patch_files(directory: Path) -> List[Path]:
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".csv")
    if not files:
        raise InputError(f"no CSV files in {directory}")
    return files


def cmd_extract(args) -> int:
    src = Path(args.input)
    out = Path(args.output)
    cfg = load_config(args.config, args.sample_rate)
    if src.is_dir():
        files = _patch_files(src)
        loaded = [read_rgb_csv(f) for f in files]
        patches = [RgbSignal(s, args.sample_rate) for _, s in loaded]
        if len({p.length for p in patches}) != 1:
            raise InputError("patch files differ in length")
        results = bench.extract_many(patches, cfg, args.jobs)
        frames = loaded[0][0]
        if args.aggregate == "pca":
            fused = pca_aggregate([r.y_full for r in results]) if len(results) > 1 else results[0].y_full
            write_signal_csv(out, frames, fused)
            write_diagnostics(_sidecar(out), results[0], {
                "patches": [f.name for f in files],
                "patch_objective_traces": [r.objective_trace for r in results],
            })
        else:
            out.mkdir(parents=True, exist_ok=True)
            for f, r in zip(files, results):
                target = out / f.name
                write_signal_csv(target, frames, r.y_full)
                write_diagnostics(_sidecar(target), r)
        return EXIT_OK
    frames, samples = read_rgb_csv(src)
    x = RgbSignal(samples, args.sample_rate)
    if x.length < cfg.tau:
        raise InputError(f"signal shorter than window ({x.length} < {cfg.tau} frames)")
    from .pipeline import extract

    result = extract(x, cfg)
    write_signal_csv(out, frames, result.y_full)
    write_diagnostics(_sidecar(out), result)
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = bench.parse_methods(args.methods)
    if args.patches_dir:
        if not args.ground_truth:
            raise InputError("--patches-dir requires --ground-truth")
        files = _patch_files(Path(args.patches_dir))
        patches = [RgbSignal(read_rgb_csv(f)[1], args.sample_rate) for f in files]
        _, gt = read_signal_csv(args.ground_truth, "ppg")
        n = patches[0].length
        gt = _match_length(gt, n, "ground truth")
        cfg = load_config(args.config, args.sample_rate)
        report = bench.run_patches(patches, gt, methods, cfg, args.jobs, source=str(args.patches_dir))
    else:
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = scenario.with_(seed=args.seed)
        cfg = load_config(args.config, scenario.sample_rate_hz)
        report = bench.run_synthetic(scenario, methods, cfg, args.runs, args.jobs, source=str(args.scenario))
    for path in report.write(args.report):
        log.info("wrote %s", path)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def _match_length(signal, n: int, what: str):
    if abs(signal.size - n) > LENGTH_TOLERANCE * max(signal.size, n):
        raise InputError(f"{what} has {signal.size} samples, expected {n} (mismatch beyond 1%)")
    if signal.size < n:
        raise InputError(f"{what} is shorter than the signal it is compared with")
    return signal[:n]


def cmd_metrics(args) -> int:
    _, rppg = read_signal_csv(args.rppg_csv, "rppg")
    _, ppg = read_signal_csv(args.gt_ppg_csv, "ppg")
    if abs(rppg.size - ppg.size) > LENGTH_TOLERANCE * max(rppg.size, ppg.size):
        raise InputError(f"length mismatch: {rppg.size} vs {ppg.size} samples (beyond 1%)")
    n = min(rppg.size, ppg.size)
    rppg, ppg = rppg[:n], ppg[:n]
    fs = args.sample_rate
    gt = estimate_hr(ppg, fs)
    if not gt.valid:
        raise InputError("cannot estimate heart rate of the ground-truth PPG")
    est = estimate_hr(rppg, fs)
    snr = snr_db(rppg, min(max(gt.bpm / 60.0, 0.5), 4.0), fs)
    hr_est = est.bpm if est.valid else float("nan")
    err = abs(hr_est - gt.bpm)
    ok = success_rate([hr_est], [gt.bpm], args.threshold) == 100.0
    row = {
        "snr_db": snr, "hr_est_bpm": hr_est, "hr_gt_bpm": gt.bpm, "abs_error_bpm": err,
        "success": int(ok), "hr_valid": int(est.valid),
    }
    header = ",".join(row)
    values = ",".join(str(v) if isinstance(v, int) else "%.6g" % v for v in row.values())
    sys.stdout.write(header + "\n" + values + "\n")
    if args.output:
        write_columns(args.output, {k: [v] for k, v in row.items()})
    return EXIT_OK


def cmd_synth(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_(seed=args.seed)
    count = args.patches if args.patches is not None else 1
    patches, pulse, hr = generate_patches(scenario, count)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    frames = np.arange(scenario.length)
    if count == 1:
        write_rgb_csv(out / "rgb.csv", frames, patches[0].samples)
    else:
        pdir = out / "patches"
        pdir.mkdir(exist_ok=True)
        for k, p in enumerate(patches):
            write_rgb_csv(pdir / f"patch_{k:02d}.csv", frames, p.samples)
    write_columns(out / "ground_truth.csv", {"frame_index": frames, "ppg": pulse, "hr_bpm": hr})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocksparse-rppg",
        description="Pulse extraction from RGB traces with a block-sparse time-frequency prior.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract the pulse signal from an RGB CSV or a directory of patches")
    p.add_argument("input", help="CSV with frame_index,R,G,B, or a directory of such files")
    p.add_argument("-o", "--output", required=True, help="output CSV (directory for un-aggregated patches)")
    p.add_argument("--config", help="key/value solver configuration file")
    p.add_argument("--sample-rate", type=float, default=30.0, help="frames per second (default 30)")
    p.add_argument("--aggregate", choices=["pca"], help="fuse per-patch signals")
    p.add_argument("--jobs", type=int, default=1, help="parallel patch extractions")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bench", help="compare methods on a synthetic scenario or on recorded patches")
    p.add_argument("scenario", nargs="?", default="desk-standard",
                   help="scenario file or 'desk-standard' (default)")
    p.add_argument("--methods", default="proposed,green",
                   help=f"comma separated subset of {','.join(bench.METHODS)}")
    p.add_argument("--report", "--output", dest="report", required=True, help="metric table CSV")
    p.add_argument("--config", help="key/value solver configuration file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--runs", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--patches-dir", help="directory of recorded per-patch RGB CSVs instead of a scenario")
    p.add_argument("--ground-truth", help="ground-truth PPG CSV (frame_index,ppg) for --patches-dir")
    p.add_argument("--sample-rate", type=float, default=30.0, help="frame rate of recorded patches")
    p.add_argument("--jobs", type=int, default=1, help="parallel patch extractions")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("metrics", help="score an extracted signal against a ground-truth PPG")
    p.add_argument("rppg_csv")
    p.add_argument("gt_ppg_csv")
    p.add_argument("--sample-rate", type=float, default=30.0)
    p.add_argument("--threshold", type=float, default=5.0, help="success threshold in bpm")
    p.add_argument("--output", help="also write the metric row as CSV")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="write a synthetic recording and its ground truth")
    p.add_argument("scenario", nargs="?", default="desk-standard")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--patches", type=int, help="number of patches (default 1)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
