"""Output emitters and readers: cascade CSVs, GeoJSON, benchmark report.

Floats are written with six significant digits so repeated runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import resource
import sys
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .errors import CsvFormatError
from .model import GeoPoint, GridCell, cell_of
from .patterns import AggregateEvent, AirQualityEvent, PollutantLevelEvent
from .validation import MatchedPair, SatSample

AGGREGATES_HEADER = ("EpochTime", "Latitude", "Longitude", "Pollutant", "Average", "Min", "Max", "Count")
LEVELS_HEADER = ("EpochTime", "Latitude", "Longitude", "Pollutant", "LevelNumber", "LevelName")
AIR_QUALITY_HEADER = ("EpochTime", "Latitude", "Longitude", "AQI", "DominantPollutant")
PAIRS_HEADER = ("EpochTime", "StationId", "SatValue", "StationValue", "DistanceKm")


def fmt(value: float) -> str:
    """Fixed-precision float rendering (6 significant digits)."""
    return format(float(value), ".6g")


def _epoch_str(epoch: float) -> str:
    return str(int(epoch)) if float(epoch).is_integer() else fmt(epoch)


def _center(cell: GridCell) -> tuple[float, float]:
    # Inline cell_center without GeoPoint construction; emitters format
    # hundreds of thousands of rows.
    res = cell.resolution_deg
    lat = (cell.row + 0.5) * res - 90.0
    lon = (cell.col + 0.5) * res - 180.0
    if lat > 90.0:
        lat = 90.0
    if lon > 180.0:
        lon = 180.0
    return lat, lon


def _latlon(cell: GridCell) -> tuple[str, str]:
    lat, lon = _center(cell)
    return fmt(lat), fmt(lon)


class _RowCaches:
    """Memoized rendering; cells and window ends repeat across many rows."""

    __slots__ = ("latlon", "epoch")

    def __init__(self) -> None:
        self.latlon: dict[tuple[int, int], tuple[str, str]] = {}
        self.epoch: dict[float, str] = {}

    def latlon_of(self, cell: GridCell) -> tuple[str, str]:
        key = (cell.row, cell.col)
        got = self.latlon.get(key)
        if got is None:
            got = self.latlon[key] = _latlon(cell)
        return got

    def epoch_of(self, epoch: float) -> str:
        got = self.epoch.get(epoch)
        if got is None:
            got = self.epoch[epoch] = _epoch_str(epoch)
        return got


def write_aggregates_csv(path, events: Iterable[AggregateEvent]) -> None:
    caches = _RowCaches()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AGGREGATES_HEADER)
        for ev in events:
            lat, lon = caches.latlon_of(ev.cell)
            w.writerow((caches.epoch_of(ev.epoch_time), lat, lon, ev.pollutant,
                        fmt(ev.avg), fmt(ev.min), fmt(ev.max), ev.count))


def write_levels_csv(path, events: Iterable[PollutantLevelEvent]) -> None:
    caches = _RowCaches()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LEVELS_HEADER)
        for ev in events:
            lat, lon = caches.latlon_of(ev.cell)
            w.writerow((caches.epoch_of(ev.epoch_time), lat, lon, ev.pollutant,
                        ev.level_number, ev.level_name))


def write_air_quality_csv(path, events: Iterable[AirQualityEvent]) -> None:
    caches = _RowCaches()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AIR_QUALITY_HEADER)
        for ev in events:
            lat, lon = caches.latlon_of(ev.cell)
            w.writerow((caches.epoch_of(ev.epoch_time), lat, lon, ev.aqi_level, ev.dominant_pollutant))


def write_pairs_csv(path, pairs: Iterable[MatchedPair]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PAIRS_HEADER)
        for p in pairs:
            w.writerow((_epoch_str(p.epoch_time), p.station_id,
                        fmt(p.sat_value), fmt(p.station_value), fmt(p.distance_km)))


def _read_csv(path, expected_header: Sequence[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        index = {name.strip().lower(): i for i, name in enumerate(header)}
        missing = [c for c in expected_header if c.lower() not in index]
        if missing:
            raise CsvFormatError(f"{path}: header misses columns {missing}")
        idx = [index[c.lower()] for c in expected_header]
        for row in reader:
            yield [row[i] for i in idx]


def read_air_quality_csv(path, resolution_deg: float = 0.05) -> list[SatSample]:
    """Air-quality CSV rows as satellite samples (value = AQI level)."""
    samples = []
    for epoch, lat, lon, aqi, _dom in _read_csv(path, AIR_QUALITY_HEADER):
        point = GeoPoint(float(lat), float(lon))
        samples.append(SatSample(float(epoch), point, float(aqi), cell_of(point, resolution_deg)))
    return samples


def read_aggregates_csv(path, pollutant: str | None = None,
                        resolution_deg: float = 0.05) -> list[SatSample]:
    """Aggregates CSV rows as satellite samples (value = window average)."""
    samples = []
    for epoch, lat, lon, pid, avg, _mn, _mx, _n in _read_csv(path, AGGREGATES_HEADER):
        if pollutant is not None and pid != pollutant:
            continue
        point = GeoPoint(float(lat), float(lon))
        samples.append(SatSample(float(epoch), point, float(avg), cell_of(point, resolution_deg)))
    return samples


# -- GeoJSON ------------------------------------------------------------------

def geojson_feature_collection(events: Iterable[AirQualityEvent]) -> dict:
    """Air-quality events as a GeoJSON FeatureCollection of Point features
    at cell centers, coordinates in [lon, lat] order."""
    features = []
    for ev in events:
        lat, lon = _center(ev.cell)
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [round(lon, 6), round(lat, 6)],
            },
            "properties": {
                "epoch_time": int(ev.epoch_time),
                "aqi_level": ev.aqi_level,
                "dominant_pollutant": ev.dominant_pollutant,
            },
        })
    return {"type": "FeatureCollection", "features": features}


_FEATURE_TEMPLATE = (
    '{{"geometry":{{"coordinates":[{coords}],"type":"Point"}},'
    '"properties":{{"aqi_level":{level},"dominant_pollutant":{pollutant},'
    '"epoch_time":{epoch}}},"type":"Feature"}}'
)


def write_geojson(path, events: Iterable[AirQualityEvent]) -> None:
    """Stream the feature collection; rendering matches json.dump of
    geojson_feature_collection with sorted keys and compact separators."""
    coord_cache: dict[tuple[int, int], str] = {}
    name_cache: dict[str, str] = {}
    chunks: list[str] = []
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('{"features":[')
        for ev in events:
            key = (ev.cell.row, ev.cell.col)
            coords = coord_cache.get(key)
            if coords is None:
                lat, lon = _center(ev.cell)
                # json renders floats via repr; ints stay ints after round.
                coords = coord_cache[key] = f"{json.dumps(round(lon, 6))},{json.dumps(round(lat, 6))}"
            name = name_cache.get(ev.dominant_pollutant)
            if name is None:
                name = name_cache[ev.dominant_pollutant] = json.dumps(ev.dominant_pollutant)
            chunks.append(_FEATURE_TEMPLATE.format(
                coords=coords,
                level=ev.aqi_level,
                pollutant=name,
                epoch=int(ev.epoch_time),
            ))
            if len(chunks) >= 10_000:
                fh.write(",".join(chunks))
                chunks = [""]  # keeps the joining comma for the next batch
        fh.write(",".join(chunks))
        fh.write('],"type":"FeatureCollection"}\n')


# -- benchmark report ---------------------------------------------------------

@dataclass(slots=True)
class BenchReport:
    """End-to-end run metrics, written alongside the cascade outputs."""

    input_events: int = 0
    output_events: int = 0
    wall_time_s: float = 0.0
    peak_rss_bytes: int = 0
    output_bytes: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def peak_rss_bytes() -> int:
    """Process high-water resident set size."""
    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # ru_maxrss is kilobytes on Linux, bytes on macOS.
    return rss if sys.platform == "darwin" else rss * 1024


def write_bench_report(path, report: BenchReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
