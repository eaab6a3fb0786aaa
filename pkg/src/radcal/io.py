"""File formats: radar / IMU / odometry / weights / trajectory CSV and JSON reports.

Every CSV starts with the version comment ``# radcal-v1`` followed by a header
row. Readers reject malformed input instead of repairing it. Floats are
written with ``repr`` so a read-write-read cycle is exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from radcal import __version__
from radcal.errors import AlignmentError, ParseError, ValidationError
from radcal.imu import ImuSample
from radcal.motion import RadarFrame
from radcal.traj import Trajectory

VERSION_TAG = "# radcal-v1"
RADAR_COLUMNS = ("t_s", "azimuth_rad", "doppler_mps", "range_m", "amplitude")
IMU_COLUMNS = ("t_s", "yaw_rate_radps")
ODOMETRY_COLUMNS = ("t_s", "speed_mps")
WEIGHTS_COLUMNS = ("t_s", "weight")
TRAJECTORY_COLUMNS = ("t_s", "x_m", "y_m", "heading_rad")


def _read_rows(path, columns: Sequence[str]):
    """Yield ``(line_number, [floats])`` after checking the header."""
    path = Path(path)
    with path.open(newline="") as fh:
        lines = enumerate(fh, start=1)
        header = None
        for lineno, raw in lines:
            text = raw.strip()
            if not text:
                continue
            if text.startswith("#"):
                continue
            header = [c.strip() for c in next(csv.reader([text]))]
            break
        if header is None:
            raise ParseError(path, 1, "missing header row")
        if tuple(header) != tuple(columns):
            raise ParseError(path, lineno, f"expected header {','.join(columns)}, got {','.join(header)}")
        for lineno, raw in lines:
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            cells = next(csv.reader([text]))
            if len(cells) != len(columns):
                raise ParseError(path, lineno, f"expected {len(columns)} fields, got {len(cells)}")
            try:
                values = [float(c) for c in cells]
            except ValueError:
                raise ParseError(path, lineno, f"non-numeric field in {text!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError(path, lineno, "non-finite value")
            yield lineno, values


def _write_rows(path, columns: Sequence[str], rows: Iterable[Sequence[float]]):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(VERSION_TAG + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _grouped(path, columns):
    """Group consecutive rows by timestamp; timestamps must be non-decreasing."""
    groups: list[tuple[float, list[list[float]]]] = []
    for lineno, values in _read_rows(path, columns):
        t = values[0]
        if groups and t < groups[-1][0]:
            raise ValidationError(f"{path}:{lineno}: timestamp {t!r} goes backwards")
        if groups and t == groups[-1][0]:
            groups[-1][1].append(values[1:])
        else:
            groups.append((t, [values[1:]]))
    return groups


def read_radar_csv(path) -> list[RadarFrame]:
    frames = []
    for t, rows in _grouped(path, RADAR_COLUMNS):
        arr = np.array(rows, dtype=float)
        frames.append(RadarFrame(t, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]))
    return frames


def write_radar_csv(frames: Sequence[RadarFrame], path) -> None:
    def rows():
        for f in frames:
            for a, d, r, p in zip(f.azimuth, f.doppler, f.range, f.amplitude):
                yield f.t, a, d, r, p
    _write_rows(path, RADAR_COLUMNS, rows())


def _read_series(path, columns) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for lineno, (t, value) in _read_rows(path, columns):
        if out and t <= out[-1][0]:
            raise ValidationError(f"{path}:{lineno}: timestamps must be strictly increasing (got {t!r})")
        out.append((t, value))
    return out


def read_imu_csv(path) -> list[ImuSample]:
    return [ImuSample(t, w) for t, w in _read_series(path, IMU_COLUMNS)]


def write_imu_csv(samples: Sequence[ImuSample], path) -> None:
    _write_rows(path, IMU_COLUMNS, ((s.t, s.yaw_rate) for s in samples))


def read_odometry_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Optional vehicle speed stream ``(t, speed)`` at the rear axle."""
    rows = _read_series(path, ODOMETRY_COLUMNS)
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def write_odometry_csv(t, speed, path) -> None:
    _write_rows(path, ODOMETRY_COLUMNS, zip(t, speed))


def read_weights_csv(path, frames: Sequence[RadarFrame]) -> list[np.ndarray]:
    """Per-detection weights in ``[0, 1]``, aligned index-for-index with ``frames``."""
    groups = _grouped(path, WEIGHTS_COLUMNS)
    out = []
    for k, frame in enumerate(frames):
        if k >= len(groups):
            raise AlignmentError(k, "weights file ends before this frame")
        t, rows = groups[k]
        if t != frame.t:
            raise AlignmentError(k, f"timestamp {t!r} does not match frame time {frame.t!r}")
        if len(rows) != len(frame):
            raise AlignmentError(k, f"{len(rows)} weights for {len(frame)} detections")
        w = np.array([r[0] for r in rows], dtype=float)
        if np.any((w < 0) | (w > 1)):
            raise ValidationError(f"{path}: frame {k} has weights outside [0, 1]")
        out.append(w)
    if len(groups) > len(frames):
        raise AlignmentError(len(frames), "weights file has more frames than the radar file")
    return out


def write_weights_csv(frames: Sequence[RadarFrame], weights: Sequence[np.ndarray], path) -> None:
    def rows():
        for f, w in zip(frames, weights):
            for x in w:
                yield f.t, x
    _write_rows(path, WEIGHTS_COLUMNS, rows())


def read_trajectory_csv(path) -> Trajectory:
    arr = np.array([v for _, v in _read_rows(path, TRAJECTORY_COLUMNS)], dtype=float).reshape(-1, 4)
    return Trajectory(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    _write_rows(path, TRAJECTORY_COLUMNS, zip(traj.t, traj.x, traj.y, traj.heading))


# -- JSON -------------------------------------------------------------------

def _clean(obj: Any) -> Any:
    """Round floats to 12 significant digits; non-finite floats become strings."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj: Any, path) -> None:
    Path(path).write_text(dumps(obj))


@dataclass
class ResultsReport:
    """Everything a run produced plus the configuration needed to reproduce it.

    Optional sections that were not computed are left ``None`` and are omitted
    from the JSON (absent, not null).
    """

    config: dict
    seed: int
    solutions: dict[str, dict] = field(default_factory=dict)
    frames: dict | None = None
    bias: float | None = None
    errors: dict[str, str] | None = None
    notes: list[str] | None = None
    scenes: list[dict] | None = None
    summary: dict | None = None
    mae_vs_interval: list[dict] | None = None
    outlier_sweep: list[dict] | None = None
    rte: list[dict] | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def write_report(report: ResultsReport | dict, path) -> None:
    data = report.to_dict() if isinstance(report, ResultsReport) else report
    try:
        write_json(data, path)
    except OSError as err:
        raise OSError(f"cannot write report to {path}: {err}") from err


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())
