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
import math

import numpy as np
import pytest

from TomoUnfold.Benchmark import CurvePoint
from TomoUnfold.Errors import FileFormatError
from TomoUnfold.Files import (
    dumps_curve,
    dumps_geometry,
    dumps_json,
    loads_geometry,
    loads_measurement,
    read_geometry,
    read_json,
    read_measurement,
    read_tabulated,
    write_geometry,
    write_json,
)
from TomoUnfold.Solver import Engine
from TomoUnfold.TomoModel import regular_geometry


def test_geometry_text():
    geo = regular_geometry(5, 100.0, 2.0)
    text = dumps_geometry(geo)
    assert text.splitlines()[0] == "baseline_m,time_years"
    restored = loads_geometry(text, geo.wavelength, geo.slant_range)
    assert restored.baselines == geo.baselines
    assert restored.times == geo.times


def test_geometry_file(tmp_path):
    path = tmp_path / "geometry.csv"
    write_geometry(path, regular_geometry(4, 60.0, 1.0))
    geo = read_geometry(path, 0.031, 697000.0, 35.0)
    assert geo.num_acquisitions == 4
    assert geo.incidence_angle == 35.0


@pytest.mark.parametrize(
    "text, where",
    [
        ("", "empty"),
        ("b,t\n1,0\n", ":1:"),
        ("baseline_m,time_years\n1,0\nx,1\n", ":3:"),
        ("baseline_m,time_years\n1,0,5\n", ":2:"),
    ],
)
def test_geometry_malformed(text, where):
    with pytest.raises(FileFormatError, match=where):
        loads_geometry(text, 0.031, 697000.0, source="geo.csv")


def test_measurement():
    values = loads_measurement("re,im\n1,2\n\n3.5,-4\n")
    np.testing.assert_array_equal(values, [1 + 2j, 3.5 - 4j])
    np.testing.assert_array_equal(loads_measurement("0,1\n"), [1j])
    with pytest.raises(FileFormatError):
        loads_measurement("re,im\n")
    with pytest.raises(FileFormatError, match=":2:"):
        loads_measurement("1,2\n1\n")


def test_curve():
    points = [
        CurvePoint(0.5, 6.0, 1.0, 4, 3, "abt"),
        CurvePoint(1.0, math.inf, 2.0, 4, 4, "baseline"),
    ]
    lines = dumps_curve(points).splitlines()
    assert lines[0] == (
        "normalized_distance,snr_db,amplitude_ratio,trials,"
        "effective_detections,rate,engine"
    )
    assert lines[1] == "0.5,6.0,1.0,4,3,0.75,abt"
    assert lines[2] == "1.0,inf,2.0,4,4,1.0,baseline"


def test_json(tmp_path):
    document = {
        "snr_db": math.inf,
        "engine": Engine.ABT,
        "values": (np.float64(0.5), np.int64(3)),
    }
    text = dumps_json(document)
    assert '"snr_db": "inf"' in text
    assert '"engine": "abt"' in text
    path = tmp_path / "doc.json"
    write_json(path, document)
    assert read_json(path)["values"] == [0.5, 3]


def test_json_malformed(tmp_path):
    path = tmp_path / "hyper.json"
    path.write_text('{"c1": 0.1,\n  oops}', encoding="utf-8")
    with pytest.raises(FileFormatError, match="hyper.json:2"):
        read_json(path)


def test_tabulated(tmp_path):
    path = tmp_path / "thermal.csv"
    path.write_text("time_years,value\n0,0.5\n0.5,-0.25\n", encoding="utf-8")
    assert read_tabulated(path) == ([0.0, 0.5], [0.5, -0.25])
    path.write_text("t,v\n0,1\n", encoding="utf-8")
    with pytest.raises(FileFormatError):
        read_tabulated(path)


@pytest.mark.parametrize(
    "reader",
    [
        read_measurement,
        read_json,
        read_tabulated,
        lambda path: read_geometry(path, 0.031, 697000.0),
    ],
)
def test_not_utf8(tmp_path, reader):
    path = tmp_path / "latin1.csv"
    path.write_bytes(b"re,im\n1,2\n\xe9t\n")
    with pytest.raises(FileFormatError, match="not UTF-8"):
        reader(path)
