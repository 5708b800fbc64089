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


def format_float(value: float) -> str:
    """shortest representation that reads back to the same double"""
    return repr(float(value))


def format_distance(meters: float) -> str:
    return f"{meters:.2f} m"


def format_snr(snr_db: float) -> str:
    if math.isinf(snr_db):
        return "noiseless" if snr_db > 0 else "-inf dB"
    return f"{snr_db:.1f} dB"


def format_coherence(mu: float) -> str:
    return f"{mu:.6f}"


def format_rate(rate: float) -> str:
    return f"{rate:.3f}"


def format_phase(radians: float) -> str:
    return f"{math.degrees(radians):.1f}°"
