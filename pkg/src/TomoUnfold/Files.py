#  TomoUnfold
#
#  Unfolded sparse recovery for differential SAR tomography
#  Copyright (C) 2024ff TomoUnfold Authors
#
#  This program is free software: you can redistribute it and/or modify
#  it under the terms of the GNU General Public License as published by
#  the Free Software Foundation, either version 3 of the License, or
#  (at your option) any later version.
#
#  This program is distributed in the hope that it will be useful,
#  but WITHOUT ANY WARRANTY; without even the implied warranty of
#  MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#  GNU General Public License for more details.
#
#  You should have received a copy of the GNU General Public License
#  along with this program.  If not, see <https://www.gnu.org/licenses/>.
"""Text formats: geometry CSV, measurement CSV, detection curve CSV and
JSON documents (weight sidecars, tuned hyperparameters, manifests)."""

import csv
import hashlib
import io
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .Errors import FileFormatError
from .Formatting import format_float
from .TomoModel import AcquisitionGeometry

logger = logging.getLogger(__name__)

GEOMETRY_HEADER = ("baseline_m", "time_years")
MEASUREMENT_HEADER = ("re", "im")
TABULATED_HEADER = ("time_years", "value")
CURVE_HEADER = (
    "normalized_distance",
    "snr_db",
    "amplitude_ratio",
    "trials",
    "effective_detections",
    "rate",
    "engine",
)


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FileFormatError(
            f"{path}: not UTF-8 text at byte {exc.start}"
        ) from exc


def _rows(text: str) -> Iterable[tuple[int, list[str]]]:
    for line_nr, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or all(not cell.strip() for cell in row):
            continue
        yield line_nr, [cell.strip() for cell in row]


def _floats(row: list[str], width: int, source: str, line_nr: int) -> list[float]:
    if len(row) != width:
        raise FileFormatError(
            f"{source}:{line_nr}: expected {width} fields, got {len(row)}"
        )
    try:
        return [float(cell) for cell in row]
    except ValueError as exc:
        raise FileFormatError(f"{source}:{line_nr}: malformed row") from exc


def loads_geometry(
    text: str,
    wavelength: float,
    slant_range: float,
    incidence_angle: float | None = None,
    source: str = "<geometry>",
) -> AcquisitionGeometry:
    rows = iter(_rows(text))
    try:
        line_nr, header = next(rows)
    except StopIteration as exc:
        raise FileFormatError(f"{source}: empty geometry file") from exc
    if tuple(header) != GEOMETRY_HEADER:
        raise FileFormatError(
            f"{source}:{line_nr}: expected header {','.join(GEOMETRY_HEADER)}"
        )
    baselines, times = [], []
    for line_nr, row in rows:
        baseline, time = _floats(row, 2, source, line_nr)
        baselines.append(baseline)
        times.append(time)
    try:
        return AcquisitionGeometry(
            tuple(baselines), tuple(times), wavelength, slant_range, incidence_angle
        )
    except ValueError as exc:
        raise FileFormatError(f"{source}: {exc}") from exc


def dumps_geometry(geo: AcquisitionGeometry) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GEOMETRY_HEADER)
    for baseline, time in zip(geo.baselines, geo.times, strict=True):
        writer.writerow((format_float(baseline), format_float(time)))
    return out.getvalue()


def read_geometry(
    path: str | Path,
    wavelength: float,
    slant_range: float,
    incidence_angle: float | None = None,
) -> AcquisitionGeometry:
    geo = loads_geometry(
        _read_text(path),
        wavelength,
        slant_range,
        incidence_angle,
        str(path),
    )
    logger.info("Loaded %d acquisitions from %s", geo.num_acquisitions, path)
    return geo


def write_geometry(path: str | Path, geo: AcquisitionGeometry) -> None:
    Path(path).write_text(dumps_geometry(geo), encoding="utf-8")


def loads_measurement(text: str, source: str = "<measurement>") -> np.ndarray:
    """one re,im pair per acquisition, header optional"""
    values = []
    for line_nr, row in _rows(text):
        if line_nr == 1 and tuple(row) == MEASUREMENT_HEADER:
            continue
        re_part, im_part = _floats(row, 2, source, line_nr)
        values.append(complex(re_part, im_part))
    if not values:
        raise FileFormatError(f"{source}: no measurement values")
    return np.array(values, dtype=complex)


def read_measurement(path: str | Path) -> np.ndarray:
    return loads_measurement(_read_text(path), str(path))


def dumps_curve(points: Sequence) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for point in points:
        writer.writerow(
            (
                format_float(point.normalized_distance),
                format_float(point.snr_db),
                format_float(point.amplitude_ratio),
                str(point.trials),
                str(point.effective_detections),
                format_float(point.rate),
                point.engine,
            )
        )
    return out.getvalue()


def write_curve(path: str | Path, points: Sequence) -> None:
    Path(path).write_text(dumps_curve(points), encoding="utf-8")
    logger.info("Wrote %d curve points to %s", len(points), path)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, Enum):
        return value.value
    return value


def dumps_json(document: Any) -> str:
    return json.dumps(_jsonable(document), indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, document: Any) -> None:
    Path(path).write_text(dumps_json(document), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}:{exc.lineno}: {exc.msg}") from exc


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_tabulated(path: str | Path) -> tuple[list[float], list[float]]:
    """time_years,value table of a measured motion base function"""
    source = str(path)
    rows = iter(_rows(_read_text(path)))
    try:
        line_nr, header = next(rows)
    except StopIteration as exc:
        raise FileFormatError(f"{source}: empty table") from exc
    if tuple(header) != TABULATED_HEADER:
        raise FileFormatError(
            f"{source}:{line_nr}: expected header {','.join(TABULATED_HEADER)}"
        )
    times, values = [], []
    for line_nr, row in rows:
        time, value = _floats(row, 2, source, line_nr)
        times.append(time)
        values.append(value)
    return times, values
