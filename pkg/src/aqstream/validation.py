"""Validation of satellite-derived air quality against ground stations.

Satellite samples are paired with station samples that lie within a
distance cap (spherical law of cosines, Earth radius 6378 km) and share
the same time quantum. Matching is greedy nearest-first and one-to-one;
the paired series is then scored with Pearson's r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import CorrelationUndefinedError, InsufficientDataError
from .model import GeoPoint, GridCell, StationObservation, cell_center
from .patterns import AirQualityEvent, BreakpointTable, classify_level

EARTH_RADIUS_KM = 6378.0

DEFAULT_MAX_KM = 1.0
DEFAULT_TIME_QUANTUM_S = 600.0  # ground stations report every 10 minutes


def great_circle_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance via the spherical law of cosines.

    D = arccos(sin latA * sin latB + cos latA * cos latB * cos(lonA - lonB)) * R.
    The arccos argument is clamped to [-1, 1] to absorb floating-point
    overshoot for near-identical points.
    """
    lat_a = math.radians(a.lat)
    lat_b = math.radians(b.lat)
    dlon = math.radians(a.lon - b.lon)
    arg = math.sin(lat_a) * math.sin(lat_b) + math.cos(lat_a) * math.cos(lat_b) * math.cos(dlon)
    return math.acos(min(1.0, max(-1.0, arg))) * EARTH_RADIUS_KM


@dataclass(frozen=True, slots=True)
class SatSample:
    """One satellite-side value to validate (an AQI level or a window average)."""

    epoch_time: float
    point: GeoPoint
    value: float
    cell: GridCell | None = None


@dataclass(frozen=True, slots=True)
class StationSample:
    epoch_time: float
    point: GeoPoint
    value: float
    station_id: str


@dataclass(frozen=True, slots=True)
class MatchedPair:
    epoch_time: float
    sat_value: float
    station_value: float
    distance_km: float
    station_id: str
    cell: GridCell | None = None


@dataclass(frozen=True)
class ValidationReport:
    pairs: tuple[MatchedPair, ...]
    r: float
    unmatched_sat: int
    unmatched_station: int

    @property
    def pair_count(self) -> int:
        return len(self.pairs)


def match_pairs(
    sat_samples: Sequence[SatSample],
    station_samples: Sequence[StationSample],
    max_km: float = DEFAULT_MAX_KM,
    time_quantum: float = DEFAULT_TIME_QUANTUM_S,
) -> list[MatchedPair]:
    """Pair satellite samples with stations: same truncated timestamp,
    distance <= max_km, each side used at most once.

    Candidates are taken globally nearest-first; ties break on the
    truncated time, then station_id, then the satellite sample's position,
    so the result does not depend on input order. Output is sorted by
    (epoch_time, station_id).
    """
    if max_km <= 0 or time_quantum <= 0:
        raise ValueError("max_km and time_quantum must be positive")
    by_quantum: dict[int, list[int]] = {}
    for j, obs in enumerate(station_samples):
        by_quantum.setdefault(int(obs.epoch_time // time_quantum), []).append(j)

    candidates = []
    for i, sat in enumerate(sat_samples):
        q = int(sat.epoch_time // time_quantum)
        for j in by_quantum.get(q, ()):
            obs = station_samples[j]
            d = great_circle_km(sat.point, obs.point)
            if d <= max_km:
                candidates.append((d, q, obs.station_id, sat.point.lat, sat.point.lon, i, j))
    candidates.sort(key=lambda c: c[:5])

    used_sat: set[int] = set()
    used_obs: set[int] = set()
    pairs: list[MatchedPair] = []
    for d, q, station_id, _lat, _lon, i, j in candidates:
        if i in used_sat or j in used_obs:
            continue
        used_sat.add(i)
        used_obs.add(j)
        sat = sat_samples[i]
        pairs.append(MatchedPair(
            epoch_time=sat.epoch_time,
            sat_value=sat.value,
            station_value=station_samples[j].value,
            distance_km=d,
            station_id=station_id,
            cell=sat.cell,
        ))
    pairs.sort(key=lambda p: (p.epoch_time, p.station_id))
    return pairs


def pearson_xy(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation, two-pass (means first, then moments)."""
    n = len(xs)
    if n != len(ys):
        raise ValueError("series lengths differ")
    if n < 2:
        raise CorrelationUndefinedError(f"need at least 2 pairs, got {n}")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise CorrelationUndefinedError(
            "correlation undefined: zero variance "
            f"(sat variance {sxx:.3g}, station variance {syy:.3g} over {n} pairs)"
        )
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def pearson(pairs: Sequence[MatchedPair]) -> float:
    return pearson_xy([p.sat_value for p in pairs], [p.station_value for p in pairs])


def validate(
    sat_samples: Sequence[SatSample],
    station_samples: Sequence[StationSample],
    max_km: float = DEFAULT_MAX_KM,
    time_quantum: float = DEFAULT_TIME_QUANTUM_S,
) -> ValidationReport:
    pairs = match_pairs(sat_samples, station_samples, max_km, time_quantum)
    if len(pairs) < 2:
        raise InsufficientDataError(f"insufficient pairs for validation: {len(pairs)}")
    return ValidationReport(
        pairs=tuple(pairs),
        r=pearson(pairs),
        unmatched_sat=len(sat_samples) - len(pairs),
        unmatched_station=len(station_samples) - len(pairs),
    )


# -- sample extraction for the two comparison modes --------------------------

def aqi_samples(events: Iterable[AirQualityEvent]) -> list[SatSample]:
    """Satellite AQI events as samples located at their cell centers."""
    return [
        SatSample(ev.epoch_time, cell_center(ev.cell), float(ev.aqi_level), ev.cell)
        for ev in events
    ]


def station_level_samples(
    observations: Sequence[StationObservation],
    table: BreakpointTable,
    time_quantum: float = DEFAULT_TIME_QUANTUM_S,
) -> list[StationSample]:
    """Station-side AQI: per station and time quantum, the maximum
    classified level over its observations (pollutants without bands are
    ignored). Sample timestamps sit on the quantum start."""
    best: dict[tuple[str, int], tuple[int, StationObservation]] = {}
    for obs in sorted(observations, key=lambda o: (o.station_id, o.epoch_time, o.pollutant)):
        if not table.has(obs.pollutant):
            continue
        level = classify_level(obs.value, obs.pollutant, table).level_number
        key = (obs.station_id, int(obs.epoch_time // time_quantum))
        cur = best.get(key)
        if cur is None or level > cur[0]:
            best[key] = (level, obs)
    return [
        StationSample(q * time_quantum, obs.location, float(level), sid)
        for (sid, q), (level, obs) in sorted(best.items())
    ]


def station_concentration_samples(
    observations: Sequence[StationObservation],
    pollutant: str | None = None,
) -> list[StationSample]:
    """Raw station concentrations, optionally restricted to one pollutant."""
    return [
        StationSample(obs.epoch_time, obs.location, obs.value, obs.station_id)
        for obs in observations
        if pollutant is None or obs.pollutant == pollutant
    ]
