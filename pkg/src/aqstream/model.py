"""Core domain types: geography, pollutants, measurement records and events.

Everything here is immutable after construction and validated by the
constructor, so instances can be handed between threads freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Engine units: gases travel as parts-per-million by volume, particulate
# matter as micrograms per cubic metre.
PPMV = "PPMV"
UG_M3 = "UG_M3"

ENGINE_UNITS = frozenset({PPMV, UG_M3})
VALID_WINDOW_HOURS = frozenset({1, 8, 24})

DEFAULT_GRID_RESOLUTION_DEG = 0.05


def is_empty_value(value: float) -> bool:
    """True for the "-0.0" empty sentinel and for non-finite values.

    Plain +0.0 is a legal measurement; only the negative-zero bit pattern
    (which is also what the textual form "-0.0" parses to) marks a missing
    reading.
    """
    if not math.isfinite(value):
        return True
    return value == 0.0 and math.copysign(1.0, value) < 0.0


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A WGS84 coordinate in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range [-90, 90]: {self.lat}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range [-180, 180]: {self.lon}")


@dataclass(frozen=True, slots=True, order=True)
class GridCell:
    """Quantized location used as the aggregation key.

    Row 0 starts at latitude -90, column 0 at longitude -180. Cells are
    half-open on their upper edges except the last row/column, which absorbs
    the +90 / +180 boundary.
    """

    row: int
    col: int
    resolution_deg: float = DEFAULT_GRID_RESOLUTION_DEG


def cell_of(p: GeoPoint, resolution_deg: float = DEFAULT_GRID_RESOLUTION_DEG) -> GridCell:
    """Quantize a point onto the grid: row = floor((lat+90)/res), col likewise."""
    if not (resolution_deg > 0.0 and math.isfinite(resolution_deg)):
        raise ValueError(f"resolution must be positive, got {resolution_deg}")
    n_rows = math.ceil(180.0 / resolution_deg)
    n_cols = math.ceil(360.0 / resolution_deg)
    row = math.floor((p.lat + 90.0) / resolution_deg)
    col = math.floor((p.lon + 180.0) / resolution_deg)
    # Fold the exact upper domain edge into the last cell.
    row = min(row, n_rows - 1)
    col = min(col, n_cols - 1)
    return GridCell(row, col, resolution_deg)


def cell_center(cell: GridCell) -> GeoPoint:
    """Geographic center of a cell, clamped into the valid coordinate domain."""
    res = cell.resolution_deg
    lat = (cell.row + 0.5) * res - 90.0
    lon = (cell.col + 0.5) * res - 180.0
    return GeoPoint(min(max(lat, -90.0), 90.0), min(max(lon, -180.0), 180.0))


@dataclass(frozen=True, slots=True)
class Pollutant:
    """A catalog pollutant and how its measurements are aggregated.

    Gases carry PPMV and a molecular weight; particulate matter carries
    UG_M3 and no molecular weight. window_hours is the averaging period of
    the aggregation stage (1, 8 or 24 hours).
    """

    id: str
    unit: str
    window_hours: int
    molecular_weight: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("pollutant id must be non-empty")
        if self.unit not in ENGINE_UNITS:
            raise ValueError(f"{self.id}: unit must be one of {sorted(ENGINE_UNITS)}, got {self.unit!r}")
        if self.window_hours not in VALID_WINDOW_HOURS:
            raise ValueError(f"{self.id}: window_hours must be in {sorted(VALID_WINDOW_HOURS)}, got {self.window_hours}")
        if self.unit == UG_M3 and self.molecular_weight is not None:
            raise ValueError(f"{self.id}: particulate matter carries no molecular weight")
        if self.unit == PPMV and not (self.molecular_weight and self.molecular_weight > 0):
            raise ValueError(f"{self.id}: gases require a positive molecular weight")

    @property
    def window_seconds(self) -> int:
        return self.window_hours * 3600


@dataclass(frozen=True, slots=True)
class PlotRecord:
    """One geo-temporal measurement row from a fused satellite CSV.

    `levels` always holds 12 altitude-slice values, index 0 lowest; missing
    slices hold the -0.0 sentinel. `date_time` is the redundant human form
    of `epoch_time` and is verified against it at parse time.
    """

    epoch_time: float
    location: GeoPoint
    variable: str
    levels: tuple[float, ...]
    date_time: str | None = None
    quality: str | None = None

    def __post_init__(self) -> None:
        if len(self.levels) != 12:
            raise ValueError(f"levels must have exactly 12 entries, got {len(self.levels)}")
        if not math.isfinite(self.epoch_time):
            raise ValueError("epoch_time must be finite")


@dataclass(frozen=True, slots=True)
class SimpleEvent:
    """A normalized measurement entering the event engine.

    The value is in the pollutant's engine unit, finite, non-negative and
    never the empty sentinel; the constructor enforces this.
    """

    epoch_time: float
    location: GeoPoint
    pollutant: str
    value: float

    def __post_init__(self) -> None:
        if is_empty_value(self.value):
            raise ValueError(f"event value is empty or non-finite: {self.value!r}")
        if self.value < 0.0:
            raise ValueError(f"event value must be non-negative: {self.value}")
        if not math.isfinite(self.epoch_time):
            raise ValueError("epoch_time must be finite")


@dataclass(frozen=True, slots=True)
class StationObservation:
    """A ground-station measurement used to validate satellite-derived AQI."""

    epoch_time: float
    location: GeoPoint
    pollutant: str
    value: float
    station_id: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value < 0.0:
            raise ValueError(f"observation value must be finite and non-negative: {self.value!r}")
        if not self.station_id:
            raise ValueError("station_id must be non-empty")
