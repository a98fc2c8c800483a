"""Seeded synthetic data standing in for live satellite feeds.

Plots are scattered uniformly over a region with per-pollutant baselines,
Gaussian plumes around hotspot coordinates and seeded noise, written as
one plot CSV per pollutant. Optionally a paired validation fixture is
generated: satellite samples drawn N(mean, sd) and a station series
station = slope * sat + intercept + N(0, noise_sd), whose expected Pearson
correlation has the closed form

    r = |slope| * sd / sqrt(slope^2 * sd^2 + noise_sd^2)

so correlation recovery can be checked against an analytic value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import Catalog
from .errors import ConfigurationError
from .ingest import BoundingBox

# 2020-09-13T13:40:00Z; an arbitrary fixed default aligned to the 30-min grid.
DEFAULT_START_EPOCH = 1_600_002_000
DEFAULT_DURATION_S = 86_400

# Baselines sit in the lowest band; plume amplitudes push hotspot cells up
# several levels so the cascade output is not uniformly "Good".
_FIELD_PARAMS: dict[str, tuple[float, float, float]] = {
    # id: (baseline, plume amplitude, noise sd)
    "CH4": (1.7, 9.0, 0.05),
    "CO": (2.0, 12.0, 0.3),
    "CO2": (410.0, 900.0, 5.0),
    "NO2": (0.03, 0.5, 0.004),
    "NOX": (0.03, 0.6, 0.004),
    "O3": (0.03, 0.12, 0.004),
    "SO2": (0.02, 0.35, 0.003),
    "PM25": (8.0, 120.0, 1.0),
    "PM10": (20.0, 300.0, 2.0),
}
_DEFAULT_FIELD = (1.0, 5.0, 0.05)


def default_hotspots(box: BoundingBox) -> list[tuple[float, float]]:
    """Two plume centers at one and two thirds of the region diagonal."""
    lat_span = box.lat_max - box.lat_min
    lon_span = box.lon_max - box.lon_min
    return [
        (box.lat_min + lat_span / 3.0, box.lon_min + lon_span / 3.0),
        (box.lat_min + 2.0 * lat_span / 3.0, box.lon_min + 2.0 * lon_span / 3.0),
    ]


def _iso_utc(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S+00:00")


@dataclass(frozen=True)
class SynthResult:
    plot_paths: tuple[Path, ...]
    rows_written: int


def generate_corpus(
    out_dir,
    catalog: Catalog,
    region: str,
    n_plots: int,
    seed: int,
    hotspots: Sequence[tuple[float, float]] | None = None,
    start_epoch: int = DEFAULT_START_EPOCH,
    duration_s: int = DEFAULT_DURATION_S,
    plume_sigma_deg: float = 0.35,
    empty_fraction: float = 0.0,
) -> SynthResult:
    """Write one plot CSV per catalog pollutant; n_plots rows in total.

    The value lands in Level1 (every 17th row in Level2 instead, to
    exercise level selection); other slices carry the "-0.0" sentinel.
    empty_fraction turns that share of rows into all-empty rows.
    """
    if n_plots <= 0:
        raise ConfigurationError(f"n_plots must be positive, got {n_plots}")
    box = catalog.region(region)
    if hotspots is None:
        hotspots = default_hotspots(box)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    n_pollutants = len(catalog.pollutants)
    if n_pollutants == 0:
        raise ConfigurationError("catalog has no pollutants")
    counts = [n_plots // n_pollutants] * n_pollutants
    for i in range(n_plots % n_pollutants):
        counts[i] += 1

    paths = []
    total = 0
    for pollutant, n in zip(catalog.pollutants, counts):
        baseline, amplitude, noise_sd = _FIELD_PARAMS.get(pollutant.id, _DEFAULT_FIELD)
        epochs = np.sort(rng.integers(start_epoch, start_epoch + duration_s, size=n))
        lats = rng.uniform(box.lat_min, box.lat_max, size=n)
        lons = rng.uniform(box.lon_min, box.lon_max, size=n)
        values = np.full(n, baseline) + noise_sd * rng.standard_normal(n)
        for h_lat, h_lon in hotspots:
            d2 = (lats - h_lat) ** 2 + (lons - h_lon) ** 2
            values = values + amplitude * np.exp(-d2 / (2.0 * plume_sigma_deg**2))
        values = np.maximum(values, 0.0)
        empty_rows = (rng.random(n) < empty_fraction) if empty_fraction > 0 else np.zeros(n, bool)

        path = out_dir / f"plots_{pollutant.id}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(("EpochTime", "DateTime", "Longitude", "Latitude")
                       + tuple(f"Level{i}" for i in range(1, 13)))
            for i in range(n):
                epoch = int(epochs[i])
                levels = ["-0.0"] * 12
                if not empty_rows[i]:
                    slot = 1 if i % 17 == 16 else 0
                    levels[slot] = format(float(values[i]), ".6g")
                w.writerow((epoch, _iso_utc(epoch), format(float(lons[i]), ".6f"),
                            format(float(lats[i]), ".6f"), *levels))
        paths.append(path)
        total += n
    return SynthResult(tuple(paths), total)


def expected_pairing_r(slope: float, sat_sd: float, noise_sd: float) -> float:
    """Analytic Pearson r of (sat, slope*sat + intercept + noise)."""
    if slope == 0.0:
        return 0.0
    denom = math.sqrt(slope * slope * sat_sd * sat_sd + noise_sd * noise_sd)
    if denom == 0.0:
        raise ValueError("degenerate pairing: zero slope*sd and zero noise")
    return abs(slope) * sat_sd / denom


def generate_paired_series(
    out_dir,
    region_box: BoundingBox,
    n_pairs: int,
    seed: int,
    slope: float = 1.0,
    intercept: float = 0.0,
    noise_sd: float = 0.0,
    sat_mean: float = 5.0,
    sat_sd: float = 1.0,
    pollutant: str = "CO",
    n_sites: int = 25,
    time_quantum_s: int = 600,
    start_epoch: int = DEFAULT_START_EPOCH,
) -> tuple[Path, Path]:
    """Write a co-located satellite/station pair of CSVs for validation.

    The satellite side uses the aggregates CSV format so the validate
    command consumes it unchanged; both sides share exact coordinates and
    quantum-aligned timestamps, so every row pairs. Means and deviations
    must keep values non-negative (checked).
    """
    if n_pairs <= 0 or n_sites <= 0:
        raise ConfigurationError("n_pairs and n_sites must be positive")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    site_lats = rng.uniform(region_box.lat_min, region_box.lat_max, size=n_sites)
    site_lons = rng.uniform(region_box.lon_min, region_box.lon_max, size=n_sites)
    sat_values = sat_mean + sat_sd * rng.standard_normal(n_pairs)
    station_values = slope * sat_values + intercept + noise_sd * rng.standard_normal(n_pairs)
    if (sat_values < 0).any() or (station_values < 0).any():
        raise ConfigurationError(
            "pairing parameters produced negative values; raise sat_mean/intercept or lower deviations"
        )

    sat_path = out_dir / "pair_satellite.csv"
    station_path = out_dir / "pair_station.csv"
    with open(sat_path, "w", newline="", encoding="utf-8") as sat_fh, \
            open(station_path, "w", newline="", encoding="utf-8") as st_fh:
        sat_w = csv.writer(sat_fh)
        st_w = csv.writer(st_fh)
        sat_w.writerow(("EpochTime", "Latitude", "Longitude", "Pollutant", "Average", "Min", "Max", "Count"))
        st_w.writerow(("station_id", "epoch_time", "lat", "lon", "pollutant", "value", "unit"))
        for k in range(n_pairs):
            site = k % n_sites
            epoch = start_epoch + (k // n_sites) * time_quantum_s
            lat = format(float(site_lats[site]), ".6f")
            lon = format(float(site_lons[site]), ".6f")
            sat_v = format(float(sat_values[k]), ".6g")
            st_v = format(float(station_values[k]), ".6g")
            sat_w.writerow((epoch, lat, lon, pollutant, sat_v, sat_v, sat_v, 1))
            st_w.writerow((f"st{site:03d}", epoch, lat, lon, pollutant, st_v, "PPMV"))
    return sat_path, station_path
