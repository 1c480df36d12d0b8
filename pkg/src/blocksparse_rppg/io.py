"""CSV traces, key/value configuration files and diagnostics sidecars."""

from __future__ import annotations

import csv
import json
from dataclasses import fields
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .core import InputError, SolverConfig, default_config
from .synth import DESK_STANDARD, SynthScenario

FLOAT_FMT = "%.17g"


class CsvFormatError(InputError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_columns(path, required: Sequence[str]) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """Read a headed numeric CSV and return ``(frame_index, {column: values})``.

    Column names match case-insensitively; ``frame_index`` is always required.
    """
    path = Path(path)
    wanted = ["frame_index", *required]
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError(path, 1, "file is empty")
        names = [h.strip().lower() for h in header]
        if all(_is_number(h) for h in header):
            raise CsvFormatError(path, 1, "missing header row")
        missing = [w for w in wanted if w.lower() not in names]
        if missing:
            raise CsvFormatError(path, 1, f"missing column(s) {', '.join(missing)}")
        idx = [names.index(w.lower()) for w in wanted]
        rows: List[List[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvFormatError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(row[i]) for i in idx]
            except ValueError:
                raise CsvFormatError(path, lineno, "non-numeric value") from None
            if not all(np.isfinite(values)):
                raise CsvFormatError(path, lineno, "non-finite value")
            rows.append(values)
    if not rows:
        raise CsvFormatError(path, 2, "no data rows")
    data = np.asarray(rows)
    frames = data[:, 0]
    if np.any(np.diff(frames) <= 0):
        bad = int(np.argmax(np.diff(frames) <= 0)) + 3
        raise CsvFormatError(path, bad, "frame_index must be strictly increasing")
    return frames.astype(int), {name: data[:, k + 1] for k, name in enumerate(required)}


def read_rgb_csv(path) -> Tuple[np.ndarray, np.ndarray]:
    """``(frame_index, samples)`` from a ``frame_index,R,G,B`` file."""
    frames, cols = read_columns(path, ["R", "G", "B"])
    return frames, np.column_stack([cols["R"], cols["G"], cols["B"]])


def read_signal_csv(path, column: str) -> Tuple[np.ndarray, np.ndarray]:
    frames, cols = read_columns(path, [column])
    return frames, cols[column]


def write_columns(path, columns: Dict[str, Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*arrays):
            writer.writerow([str(int(v)) if np.issubdtype(type(v), np.integer) else FLOAT_FMT % v
                             for v in row])


def write_signal_csv(path, frames, values, column: str = "rppg") -> None:
    write_columns(path, {"frame_index": np.asarray(frames, dtype=int), column: np.asarray(values, float)})


def write_rgb_csv(path, frames, samples) -> None:
    samples = np.asarray(samples, dtype=float)
    write_columns(path, {"frame_index": np.asarray(frames, dtype=int),
                         "R": samples[:, 0], "G": samples[:, 1], "B": samples[:, 2]})


def parse_kv(text: str, source: str = "<config>") -> Dict[str, str]:
    """Flat ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise InputError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split(sep, 1))
        if not key:
            raise InputError(f"{source}:{lineno}: empty key")
        out[key.lower()] = value
    return out


def _read_kv_file(path) -> Dict[str, str]:
    try:
        return parse_kv(Path(path).read_text(), str(path))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _floats(value: str) -> List[float]:
    return [float(v) for v in value.replace(";", ",").split(",") if v.strip()]


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


_CONFIG_TYPES = {
    "tau": int, "beta": float, "gamma": float, "outer_iters": int, "admm_iters": int,
    "cg_tol": float, "cg_max_iters": int, "cg_precondition": _bool, "w_solver_tol": float,
    "w_max_iters": int, "sr_threshold_bpm": float, "admm_early_stop": _bool, "admm_tol": float,
    "outer_early_stop": _bool, "outer_rtol": float,
}
_CONFIG_ALIASES = {"k": "admm_iters", "admm_k": "admm_iters"}


def config_from_mapping(mapping: Dict[str, str], sample_rate_hz: float, source: str = "<config>") -> SolverConfig:
    """Build a :class:`SolverConfig`; every key is optional and defaults to the published values.

    Besides the field names, ``passband_hz = low, high``, ``alpha_in_band``,
    ``alpha_out_band`` and an explicit ``alpha = a0, a1, ...`` are accepted.
    """
    from .core import passband_alpha

    kw = {}
    extra = {}
    known_fields = {f.name for f in fields(SolverConfig)}
    for key, value in mapping.items():
        key = _CONFIG_ALIASES.get(key, key)
        try:
            if key in _CONFIG_TYPES:
                kw[key] = _CONFIG_TYPES[key](value)
            elif key == "passband_hz":
                band = _floats(value)
                if len(band) != 2:
                    raise ValueError("passband needs two values")
                kw[key] = (band[0], band[1])
            elif key in ("alpha_in_band", "alpha_out_band"):
                extra[key] = float(value)
            elif key == "alpha":
                kw["alpha"] = np.array(_floats(value))
            elif key in known_fields:
                raise ValueError("field cannot be set from a config file")
            else:
                raise InputError(f"{source}: unknown configuration key '{key}'")
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"{source}: bad value for '{key}': {exc}") from None
    tau = kw.pop("tau", 150)
    if "alpha" not in kw and extra:
        kw["alpha"] = passband_alpha(sample_rate_hz, tau, kw.get("passband_hz", (0.7, 4.0)),
                                     extra.get("alpha_in_band", 0.1), extra.get("alpha_out_band", 100.0))
    return default_config(sample_rate_hz, tau, **kw)


def load_config(path, sample_rate_hz: float) -> SolverConfig:
    if path is None:
        return default_config(sample_rate_hz)
    return config_from_mapping(_read_kv_file(path), sample_rate_hz, str(path))


_SCENARIO_SCALARS = {
    "duration_s": float, "sample_rate_hz": float, "illumination_drift_amp": float,
    "noise_std": float, "seed": int, "patches": int,
}
_SCENARIO_ALIASES = {"hr_bpm": "hr_trajectory_bpm", "harmonics": "pulse_harmonic_amplitudes",
                     "mixing": "mixing_trajectory", "drift_amp": "illumination_drift_amp"}


def scenario_from_mapping(mapping: Dict[str, str], source: str = "<scenario>") -> SynthScenario:
    """Scenario fields override the ``desk-standard`` defaults.

    Sequences are comma separated; ``mixing_trajectory`` lists 3-vectors
    separated by ``;`` (each vector is normalised).
    """
    kw = {}
    for key, value in mapping.items():
        key = _SCENARIO_ALIASES.get(key, key)
        try:
            if key in _SCENARIO_SCALARS:
                kw[key] = _SCENARIO_SCALARS[key](value)
            elif key in ("hr_trajectory_bpm", "pulse_harmonic_amplitudes"):
                kw[key] = tuple(_floats(value))
            elif key == "drift_direction":
                kw[key] = tuple(_floats(value))
            elif key == "mixing_trajectory":
                vecs = []
                for chunk in value.split(";"):
                    if chunk.strip():
                        v = np.array([float(c) for c in chunk.replace(",", " ").split()])
                        vecs.append(tuple(v / np.linalg.norm(v)))
                kw[key] = tuple(vecs)
            else:
                raise InputError(f"{source}: unknown scenario key '{key}'")
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"{source}: bad value for '{key}': {exc}") from None
    return DESK_STANDARD.with_(**kw)


def load_scenario(spec) -> SynthScenario:
    """``desk-standard`` or a path to a key/value scenario file."""
    if spec is None or str(spec) == "desk-standard":
        return DESK_STANDARD
    return scenario_from_mapping(_read_kv_file(spec), str(spec))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_diagnostics(path, result, extra: dict = None) -> None:
    """JSON sidecar with the objective trace, solver diagnostics and the w trajectory."""
    payload = {
        "objective_trace": result.objective_trace,
        "w": result.w,
        **result.diagnostics,
        **(extra or {}),
    }
    Path(path).write_text(json.dumps(_jsonable(payload), indent=1) + "\n")
