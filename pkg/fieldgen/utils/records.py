"""CSV and JSON import/export for trials, schedules, indices, curves and fits."""

from __future__ import annotations

import hashlib
import io
import json
import logging
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from fieldgen.core.analysis import (
    AdaptationIndex,
    GeneralizationCurve,
    filtered_velocity,
)
from fieldgen.core.arm import ArmParams
from fieldgen.core.controllers import DesiredTrajectory, SampledBaselines
from fieldgen.core.exceptions import (
    DataFormatError,
    EmptyDatasetError,
    MissingDirectionError,
    TooShortSeriesError,
)
from fieldgen.core.fitting import FitResult
from fieldgen.core.protocol import DIRECTIONS, Phase, Protocol
from fieldgen.core.trial import TrialCondition, TrialRecord

logger = logging.getLogger("fieldgen")

FLOAT_FORMAT = "%.17g"
TRIAL_COLUMNS = ["t", "x", "y", "vx", "vy", "fx", "fy", "q1", "q2"]
SCHEDULE_COLUMNS = ["trial", "block", "target_deg", "field", "feedback", "kind"]
INDEX_COLUMNS = ["group_deg", "direction_deg", "phase", "index"]
CURVE_COLUMNS = ["offset_deg", "mean", "sem", "n"]
MIN_BASELINE_SAMPLES = 20


def _to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _read_csv(path: Path, required: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFormatError(f"{path}: {e}") from e
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataFormatError(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


def _header_lines(condition: TrialCondition, prefix: str = "") -> list[str]:
    return [f"# {prefix}{k}: {json.dumps(v)}" for k, v in asdict(condition).items()]


def _read_headers(path: Path) -> dict[str, dict[str, Any]]:
    """Header echoes keyed by trial ('' for single-trial files)."""
    headers: dict[str, dict[str, Any]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.startswith("# "):
                break
            body = line[2:].rstrip("\n")
            trial = ""
            if body.startswith("["):
                trial, _, body = body[1:].partition("] ")
            key, sep, value = body.partition(": ")
            if not sep:
                raise DataFormatError(f"{path}:{lineno}: malformed header line")
            try:
                headers.setdefault(trial, {})[key] = json.loads(value)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"{path}:{lineno}: {e}") from e
    return headers


def _condition(values: Mapping[str, Any], path: Path) -> TrialCondition:
    names = {f.name for f in fields(TrialCondition)}
    missing = names - set(values)
    if missing:
        raise DataFormatError(f"{path}: header lacks {', '.join(sorted(missing))}")
    data = {k: values[k] for k in names}
    data["home"] = tuple(data["home"])
    data["target"] = tuple(data["target"])
    return TrialCondition(**data)


def _trial_frame(record: TrialRecord) -> pd.DataFrame:
    return pd.DataFrame(
        np.column_stack([record.t, record.p, record.v, record.f, record.q]), columns=TRIAL_COLUMNS
    )


def _record(frame: pd.DataFrame, condition: TrialCondition) -> TrialRecord:
    arr = frame[TRIAL_COLUMNS].to_numpy(dtype=float)
    return TrialRecord(
        t=arr[:, 0], p=arr[:, 1:3], v=arr[:, 3:5], f=arr[:, 5:7], q=arr[:, 7:9], condition=condition
    )


# =============================================================================
# Trials
# =============================================================================


def write_trial_csv(record: TrialRecord, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(_header_lines(record.condition)) + "\n" + _to_csv(_trial_frame(record))
    path.write_text(text, encoding="utf-8")
    return path


def read_trial_csv(path: Path) -> TrialRecord:
    path = Path(path)
    headers = _read_headers(path)
    if "" not in headers:
        raise DataFormatError(f"{path}: no trial header block")
    return _record(_read_csv(path, TRIAL_COLUMNS), _condition(headers[""], path))


def write_trials_csv(records: Sequence[TrialRecord], path: Path) -> Path:
    """One file for many trials: bracketed header echoes and a leading trial column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header: list[str] = []
    frames = []
    for record in records:
        header += _header_lines(record.condition, prefix=f"[{record.condition.index}] ")
        frame = _trial_frame(record)
        frame.insert(0, "trial", record.condition.index)
        frames.append(frame)
    body = _to_csv(pd.concat(frames, ignore_index=True)) if frames else ""
    path.write_text("\n".join(header) + "\n" + body, encoding="utf-8")
    return path


def read_trials_csv(path: Path) -> list[TrialRecord]:
    path = Path(path)
    headers = _read_headers(path)
    frame = _read_csv(path, ["trial", *TRIAL_COLUMNS])
    records = []
    for trial, rows in frame.groupby("trial", sort=False):
        key = str(trial)
        if key not in headers:
            raise DataFormatError(f"{path}: no header echo for trial {trial}")
        records.append(_record(rows, _condition(headers[key], path)))
    return records


def load_trials(paths: Iterable[Path]) -> list[TrialRecord]:
    """Read per-trial and concatenated trial files, returning trial order."""
    records: list[TrialRecord] = []
    for path in paths:
        path = Path(path)
        if "[" in path.read_text(encoding="utf-8").split("\n", 1)[0]:
            records += read_trials_csv(path)
        else:
            records.append(read_trial_csv(path))
    return sorted(records, key=lambda r: (r.condition.group or 0, r.condition.index))


# =============================================================================
# Schedules, indices, curves
# =============================================================================


def write_schedule_csv(protocol: Protocol, path: Path) -> Path:
    frame = pd.DataFrame(
        [
            (t.index, t.block, t.target, t.field_kind.value, int(t.feedback), t.kind.value)
            for t in protocol.trials
        ],
        columns=SCHEDULE_COLUMNS,
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_to_csv(frame), encoding="utf-8")
    return path


def write_indices_csv(indices: Sequence[AdaptationIndex], path: Path) -> Path:
    frame = pd.DataFrame(
        [
            (i.group, i.direction, i.phase.value, i.value, i.trial)
            for i in indices
        ],
        columns=[*INDEX_COLUMNS, "trial"],
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_to_csv(frame), encoding="utf-8")
    return path


def read_indices_csv(path: Path) -> list[AdaptationIndex]:
    frame = _read_csv(Path(path), INDEX_COLUMNS)
    if frame.empty:
        raise EmptyDatasetError(f"{path}: no indices")
    trials = frame["trial"] if "trial" in frame.columns else pd.Series([np.nan] * len(frame))
    try:
        return [
            AdaptationIndex(
                value=float(value),
                direction=int(direction) % 360,
                phase=Phase(phase),
                group=None if pd.isna(group) else int(group) % 360,
                trial=None if pd.isna(trial) else int(trial),
            )
            for group, direction, phase, value, trial in zip(
                frame["group_deg"], frame["direction_deg"], frame["phase"], frame["index"], trials
            )
        ]
    except ValueError as e:
        raise DataFormatError(f"{path}: {e}") from e


def curve_frame(curve: GeneralizationCurve) -> pd.DataFrame:
    return pd.DataFrame(
        [(pt.offset, pt.mean, pt.sem, pt.n) for pt in curve.points], columns=CURVE_COLUMNS
    )


def curve_filename(curve: GeneralizationCurve) -> str:
    suffix = "_corrected" if curve.baseline_corrected else ""
    return f"{curve.kind}_{curve.anchor:03d}{suffix}.csv"


def write_curve_csv(curve: GeneralizationCurve, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_to_csv(curve_frame(curve)), encoding="utf-8")
    return path


def read_curve_csv(path: Path) -> pd.DataFrame:
    return _read_csv(Path(path), CURVE_COLUMNS)


# =============================================================================
# Fits and manifest
# =============================================================================


def write_fit_json(fit: FitResult, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(fit.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


def read_fit_json(path: Path) -> FitResult:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}:{e.lineno}: {e.msg}") from e
    return FitResult.from_dict(data)


def sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    files: Iterable[Path],
    inputs: Mapping[str, Any],
    seeds: Mapping[str, Any],
) -> Path:
    """manifest.json listing inputs, seeds and a content hash per output file."""
    out_dir = Path(out_dir)
    entries = {
        str(Path(f).resolve().relative_to(out_dir.resolve())): sha256(Path(f))
        for f in sorted(set(map(Path, files)))
    }
    manifest = {"inputs": dict(inputs), "seeds": dict(seeds), "files": entries}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


# =============================================================================
# Baseline import
# =============================================================================


def _baseline_paths(path: Path) -> dict[int, list[pd.DataFrame]]:
    headers = _read_headers(path)
    frame = _read_csv(path, ["t", "x", "y"])
    by_direction: dict[int, list[pd.DataFrame]] = {}
    if "direction_deg" in frame.columns:
        group_cols = ["direction_deg", "trial"] if "trial" in frame.columns else ["direction_deg"]
        for key, rows in frame.groupby(group_cols, sort=True):
            direction = key[0] if isinstance(key, tuple) else key
            by_direction.setdefault(int(direction) % 360, []).append(rows)
    elif "trial" in frame.columns:
        for trial, rows in frame.groupby("trial", sort=True):
            echo = headers.get(str(trial))
            if echo is None or "direction" not in echo:
                raise DataFormatError(f"{path}: trial {trial} has no direction in its header")
            by_direction.setdefault(int(round(echo["direction"])) % 360, []).append(rows)
    elif "" in headers and "direction" in headers[""]:
        by_direction[int(round(headers[""]["direction"])) % 360] = [frame]
    else:
        raise DataFormatError(f"{path}: cannot tell which direction each path belongs to")
    return by_direction


def import_baselines(
    path: Path,
    params: ArmParams,
    rate: float = 1000.0,
    directions: Sequence[int] = DIRECTIONS,
) -> SampledBaselines:
    """Average baseline paths per direction into desired trajectories.

    Accepts a long CSV with ``direction_deg,t,x,y`` columns, or trial CSVs
    whose header echoes carry the direction. Paths are resampled onto a
    uniform grid; velocity and acceleration come from the analysis filter.

    Raises:
        DataFormatError: schema problems
        TooShortSeriesError: fewer than 20 samples for a direction
        MissingDirectionError: a requested direction has no samples
        UnreachableTargetError: a path point is outside the arm's reach
    """
    path = Path(path)
    by_direction = _baseline_paths(path)
    trajectories: dict[int, DesiredTrajectory] = {}
    for direction in directions:
        paths = by_direction.get(int(direction) % 360)
        if not paths:
            raise MissingDirectionError(f"{path}: no baseline samples for direction {direction} deg")
        duration = min(float(rows["t"].max()) for rows in paths)
        grid = np.arange(int(np.floor(duration * rate + 1e-9)) + 1) / rate
        if len(grid) < MIN_BASELINE_SAMPLES:
            raise TooShortSeriesError(
                f"{path}: direction {direction} deg has {len(grid)} samples after resampling"
            )
        stacked = []
        for rows in paths:
            rows = rows.sort_values("t")
            t = rows["t"].to_numpy(dtype=float)
            stacked.append(
                np.column_stack([np.interp(grid, t, rows[c].to_numpy(dtype=float)) for c in ("x", "y")])
            )
        p = np.mean(stacked, axis=0)
        v = filtered_velocity(p, rate)
        a = filtered_velocity(v, rate)
        trajectories[int(direction) % 360] = DesiredTrajectory.from_hand(params, grid, p, v, a)
        logger.debug(f"Imported baseline for {direction} deg from {len(paths)} path(s)")
    return SampledBaselines(trajectories)


def export_baselines(trajectories: Mapping[int, DesiredTrajectory], path: Path) -> Path:
    """Path-only long CSV (direction_deg,t,x,y) accepted by ``import_baselines``."""
    frames = [
        pd.DataFrame(
            {"direction_deg": d, "t": traj.t, "x": traj.p[:, 0], "y": traj.p[:, 1]}
        )
        for d, traj in sorted(trajectories.items())
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_to_csv(pd.concat(frames, ignore_index=True)), encoding="utf-8")
    return path


def dumps_frame(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    buffer.write(_to_csv(frame))
    return buffer.getvalue()
