"""CSV ingestion: plot files, station files, quality filters and fusion.

A plot CSV carries one variable per file (16 named columns: EpochTime,
DateTime, Longitude, Latitude, Level1..Level12; header matched
case-insensitively, extra columns ignored). Missing level cells and the
literal text "-0.0" both parse to the negative-zero empty sentinel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

from .errors import CsvFormatError
from .model import (
    GeoPoint,
    PlotRecord,
    SimpleEvent,
    StationObservation,
    is_empty_value,
)

_EMPTY = -0.0

PLOT_BASE_COLUMNS = ("epochtime", "datetime", "longitude", "latitude")
PLOT_LEVEL_COLUMNS = tuple(f"level{i}" for i in range(1, 13))
STATION_COLUMNS = ("station_id", "epoch_time", "lat", "lon", "pollutant", "value", "unit")

_UNIT_SYNONYMS = {
    "ppmv": "PPMV",
    "ppm": "PPMV",
    "ug_m3": "UG_M3",
    "ug/m3": "UG_M3",
    "µg/m³": "UG_M3",
    "μg/m³": "UG_M3",
}


@dataclass(frozen=True, slots=True)
class QualityRange:
    """Inclusive plausibility range for one variable's raw values."""

    variable: str
    min: float
    max: float

    def __post_init__(self) -> None:
        if not self.min <= self.max:
            raise ValueError(f"{self.variable}: min {self.min} exceeds max {self.max}")


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Named geographic sub-setting region (inclusive bounds)."""

    region: str
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self) -> None:
        if not (self.lat_min <= self.lat_max and self.lon_min <= self.lon_max):
            raise ValueError(f"{self.region}: bounding box bounds are inverted")

    def contains(self, p: GeoPoint) -> bool:
        return self.lat_min <= p.lat <= self.lat_max and self.lon_min <= p.lon <= self.lon_max


@dataclass(slots=True)
class IngestReport:
    """Row accounting across parse, filter and fusion stages.

    rows_read always equals rows_emitted plus the sum of the drop counters.
    """

    rows_read: int = 0
    rows_dropped_malformed: int = 0
    rows_dropped_empty: int = 0
    rows_dropped_range: int = 0
    rows_dropped_bbox: int = 0
    rows_dropped_duplicate: int = 0
    rows_emitted: int = 0

    def merge(self, other: "IngestReport") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def dropped_total(self) -> int:
        return (self.rows_dropped_malformed + self.rows_dropped_empty
                + self.rows_dropped_range + self.rows_dropped_bbox
                + self.rows_dropped_duplicate)

    def reconciles(self) -> bool:
        return self.rows_read == self.rows_emitted + self.dropped_total()


def _parse_iso_instant(text: str) -> float | None:
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _level_value(text: str) -> float:
    # An empty cell means no measurement, same as the "-0.0" sentinel.
    if not text:
        return _EMPTY
    return float(text)


def parse_plot_csv(path, variable: str) -> tuple[list[PlotRecord], IngestReport]:
    """Parse one plot CSV into records for the given variable.

    Malformed rows (non-numeric fields, out-of-range coordinates, a
    DateTime that disagrees with EpochTime) are counted and skipped. A
    missing required header column is fatal.
    """
    report = IngestReport()
    records: list[PlotRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file, header expected") from None
        index = {name.strip().lower(): i for i, name in enumerate(header)}
        missing = [c for c in PLOT_BASE_COLUMNS + PLOT_LEVEL_COLUMNS if c not in index]
        if missing:
            raise CsvFormatError(f"{path}: header misses required columns {missing}")
        i_epoch = index["epochtime"]
        i_date = index["datetime"]
        i_lon = index["longitude"]
        i_lat = index["latitude"]
        i_levels = [index[c] for c in PLOT_LEVEL_COLUMNS]
        i_quality = index.get("quality")
        for row in reader:
            report.rows_read += 1
            try:
                epoch = float(row[i_epoch])
                location = GeoPoint(float(row[i_lat]), float(row[i_lon]))
                levels = tuple(_level_value(row[i]) for i in i_levels)
                date_text = row[i_date].strip() or None
                if date_text is not None:
                    instant = _parse_iso_instant(date_text)
                    if instant is None or abs(instant - epoch) >= 1.0:
                        report.rows_dropped_malformed += 1
                        continue
                quality = row[i_quality].strip() or None if i_quality is not None else None
                records.append(PlotRecord(epoch, location, variable, levels, date_text, quality))
            except (ValueError, IndexError):
                report.rows_dropped_malformed += 1
                continue
            report.rows_emitted += 1
    return records, report


def infer_variable(stem: str, known: Iterable[str]) -> str | None:
    """Map a file name stem like "plots_morocco_CO_VCD" to a known variable
    id by matching progressively longer underscore-suffixes."""
    known = set(known)
    parts = stem.split("_")
    for i in range(len(parts)):
        candidate = "_".join(parts[i:])
        if candidate in known:
            return candidate
    return None


def filter_empty(record: PlotRecord, level_index: int) -> float | None:
    """Value of the selected altitude slice, or None if it is empty."""
    if not 0 <= level_index < len(record.levels):
        raise ValueError(f"level index out of range [0, 11]: {level_index}")
    value = record.levels[level_index]
    return None if is_empty_value(value) else value


def select_level(record: PlotRecord, policy: str | int = "lowest") -> float | None:
    """Pick the altitude slice feeding the cascade.

    Policy "lowest" walks up from the ground and returns the first
    non-empty slice; an integer selects that slice only.
    """
    if policy == "lowest":
        for value in record.levels:
            if not is_empty_value(value):
                return value
        return None
    return filter_empty(record, int(policy))


def filter_range(value: float, variable: str, ranges: Mapping[str, QualityRange]) -> bool:
    """True if the value is plausible; variables without a configured range pass."""
    qr = ranges.get(variable)
    if qr is None:
        return True
    return qr.min <= value <= qr.max


def filter_bbox(p: GeoPoint, box: BoundingBox) -> bool:
    return box.contains(p)


def _fuse_key(ev: SimpleEvent):
    return (ev.epoch_time, ev.pollutant, ev.location.lat, ev.location.lon, ev.value)


def fuse(sources: Iterable[Sequence[SimpleEvent]]) -> tuple[list[SimpleEvent], IngestReport]:
    """Merge per-source event streams into one time-ordered stream.

    Output is sorted by (epoch_time, pollutant, lat, lon, value) — the
    tie-break makes the result independent of source order — and exact
    duplicates are dropped and counted.
    """
    report = IngestReport()
    merged: list[SimpleEvent] = []
    for source in sources:
        merged.extend(source)
    report.rows_read = len(merged)
    merged.sort(key=_fuse_key)
    out: list[SimpleEvent] = []
    prev_key = None
    for ev in merged:
        key = _fuse_key(ev)
        if key == prev_key:
            report.rows_dropped_duplicate += 1
            continue
        out.append(ev)
        prev_key = key
    report.rows_emitted = len(out)
    return out, report


def parse_station_csv(path, known_pollutants: Iterable[str]) -> tuple[list[StationObservation], IngestReport]:
    """Parse ground-station observations.

    Rows with negative values are counted as range drops; unknown
    pollutants or units are counted as malformed. Values are accepted
    as-is in PPMv or ug/m3 (no conversion).
    """
    known = set(known_pollutants)
    report = IngestReport()
    observations: list[StationObservation] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file, header expected") from None
        index = {name.strip().lower(): i for i, name in enumerate(header)}
        missing = [c for c in STATION_COLUMNS if c not in index]
        if missing:
            raise CsvFormatError(f"{path}: header misses required columns {missing}")
        idx = [index[c] for c in STATION_COLUMNS]
        for row in reader:
            report.rows_read += 1
            try:
                station_id = row[idx[0]].strip()
                epoch = float(row[idx[1]])
                location = GeoPoint(float(row[idx[2]]), float(row[idx[3]]))
                pollutant = row[idx[4]].strip()
                value = float(row[idx[5]])
                unit = row[idx[6]].strip()
            except (ValueError, IndexError):
                report.rows_dropped_malformed += 1
                continue
            if not station_id or pollutant not in known:
                report.rows_dropped_malformed += 1
                continue
            if _UNIT_SYNONYMS.get(unit.lower(), unit.upper()) not in ("PPMV", "UG_M3"):
                report.rows_dropped_malformed += 1
                continue
            if not math.isfinite(value) or value < 0.0:
                report.rows_dropped_range += 1
                continue
            observations.append(StationObservation(epoch, location, pollutant, value, station_id))
            report.rows_emitted += 1
    return observations, report
