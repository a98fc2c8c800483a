"""The file-based configuration catalog.

One JSON file replaces the metadata database: pollutant definitions
(molecular weight, unit, averaging window, breakpoint bands), the raw
variable map, quality ranges, region bounding boxes, grid resolution and
cascade cadence. Ships with an editable default at data/default_catalog.json.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

from . import units
from .errors import ConfigurationError
from .ingest import BoundingBox, QualityRange
from .model import Pollutant
from .patterns import Band, BreakpointTable

RAW_UNITS = frozenset({"PPMV", "PPMM", "UG_M3"}) | units.COLUMN_UNITS


@dataclass(frozen=True, slots=True)
class VariableSpec:
    """A raw variable id as found in plot files: which pollutant it feeds
    and the unit its values arrive in."""

    pollutant: str
    unit: str


@dataclass(frozen=True)
class Catalog:
    pollutants: tuple[Pollutant, ...]
    breakpoints: BreakpointTable
    variables: Mapping[str, VariableSpec]
    quality_ranges: Mapping[str, QualityRange]
    regions: Mapping[str, BoundingBox]
    aggregation_only: frozenset[str] = frozenset()
    grid_resolution_deg: float = 0.05
    cascade_slot_seconds: int = 1800
    aggregate_emit_seconds: int | None = None
    dobson_molec_cm2: float = units.DOBSON_MOLEC_CM2
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {p.id: p for p in self.pollutants})
        if len(self._by_id) != len(self.pollutants):
            raise ConfigurationError("duplicate pollutant ids in catalog")
        if not self.grid_resolution_deg > 0:
            raise ConfigurationError("grid resolution must be positive")
        if not self.cascade_slot_seconds > 0:
            raise ConfigurationError("cascade slot must be positive")
        for var, vs in self.variables.items():
            if vs.pollutant not in self._by_id:
                raise ConfigurationError(f"variable {var!r} names unknown pollutant {vs.pollutant!r}")
            if vs.unit not in RAW_UNITS:
                raise ConfigurationError(f"variable {var!r} has unknown unit {vs.unit!r}")

    def pollutant(self, pollutant_id: str) -> Pollutant:
        try:
            return self._by_id[pollutant_id]
        except KeyError:
            raise ConfigurationError(f"unknown pollutant {pollutant_id!r}") from None

    def pollutant_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.pollutants)

    def region(self, name: str) -> BoundingBox:
        try:
            return self.regions[name]
        except KeyError:
            raise ConfigurationError(
                f"unknown region {name!r}; catalog defines {sorted(self.regions)}"
            ) from None


def _parse_band(pid: str, raw: dict) -> Band:
    upper = raw["upper"]
    return Band(
        lower=float(raw["lower"]),
        upper=math.inf if upper is None else float(upper),
        level_number=int(raw["level"]),
        level_name=str(raw["name"]),
    )


def catalog_from_dict(doc: dict) -> Catalog:
    try:
        pollutants = []
        bands: dict[str, list[Band]] = {}
        aggregation_only = set()
        for entry in doc["pollutants"]:
            pid = entry["id"]
            pollutants.append(Pollutant(
                id=pid,
                unit=entry["unit"],
                window_hours=int(entry["window_hours"]),
                molecular_weight=entry.get("molecular_weight"),
            ))
            if entry.get("aggregation_only"):
                aggregation_only.add(pid)
            elif "bands" in entry:
                bands[pid] = [_parse_band(pid, b) for b in entry["bands"]]
        variables = {
            name: VariableSpec(v["pollutant"], v["unit"])
            for name, v in doc.get("variables", {}).items()
        }
        # Every pollutant id doubles as a variable already in engine units.
        for p in pollutants:
            variables.setdefault(p.id, VariableSpec(p.id, p.unit))
        quality_ranges = {
            name: QualityRange(name, float(r["min"]), float(r["max"]))
            for name, r in doc.get("quality_ranges", {}).items()
        }
        regions = {
            name: BoundingBox(name, float(r["lat_min"]), float(r["lat_max"]),
                              float(r["lon_min"]), float(r["lon_max"]))
            for name, r in doc.get("regions", {}).items()
        }
        return Catalog(
            pollutants=tuple(pollutants),
            breakpoints=BreakpointTable(bands),
            variables=variables,
            quality_ranges=quality_ranges,
            regions=regions,
            aggregation_only=frozenset(aggregation_only),
            grid_resolution_deg=float(doc.get("grid_resolution_deg", 0.05)),
            cascade_slot_seconds=int(doc.get("cascade_slot_seconds", 1800)),
            aggregate_emit_seconds=doc.get("aggregate_emit_seconds"),
            dobson_molec_cm2=float(doc.get("dobson_unit_molecules_per_cm2", units.DOBSON_MOLEC_CM2)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid catalog: {exc}") from exc


def load_catalog(path) -> Catalog:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    return catalog_from_dict(doc)


def default_catalog() -> Catalog:
    """The packaged catalog: US EPA bands for the six EPA pollutants,
    documented custom bands for CH4, CO2 and NOX."""
    ref = resources.files("aqstream").joinpath("data/default_catalog.json")
    with resources.as_file(ref) as path:
        return load_catalog(path)
