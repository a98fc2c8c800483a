"""The three-stage air-quality cascade built on the engine kernel.

Stage 1 aggregates each pollutant's events per grid cell over its
averaging window (avg/min/max/count). Stage 2 classifies each aggregate
average into one of six concentration bands (one pattern per pollutant and
band, firing on 30-minute slots). Stage 3 takes, per cell and 30-minute
slot, the highest level across pollutants and names the dominant one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping

from .engine import ARGMAX_LEVEL, AVG, ComplexEvent, EngineEvent, FilterSpec, PatternSpec
from .errors import ConfigurationError
from .model import GridCell, SimpleEvent, cell_of

if TYPE_CHECKING:
    from .catalog import Catalog

log = logging.getLogger(__name__)

SIMPLE_STREAM = "simple"
AGGREGATE_STREAM = "aggregates"
LEVEL_STREAM = "levels"
AQI_STREAM = "aqi"

LEVEL_NAMES = (
    "Good",
    "Moderate",
    "Unhealthy for Sensitive Groups",
    "Unhealthy",
    "Very Unhealthy",
    "Hazardous",
)
N_LEVELS = 6


@dataclass(frozen=True, slots=True)
class Band:
    """One concentration band [lower, upper) mapping to an ordinal level."""

    lower: float
    upper: float
    level_number: int
    level_name: str


class BreakpointTable:
    """Per-pollutant concentration bands mapping window averages to levels 1-6.

    Each pollutant's bands must partition [0, inf): six contiguous
    half-open bands, levels exactly 1..6, the last band open above.
    """

    def __init__(self, bands_by_pollutant: Mapping[str, Iterable[Band]]):
        table: dict[str, tuple[Band, ...]] = {}
        for pid, bands in bands_by_pollutant.items():
            bands = tuple(bands)
            if len(bands) != N_LEVELS:
                raise ConfigurationError(f"{pid}: expected {N_LEVELS} bands, got {len(bands)}")
            for i, band in enumerate(bands):
                if band.level_number != i + 1:
                    raise ConfigurationError(
                        f"{pid}: band {i} has level {band.level_number}, expected {i + 1}"
                    )
                if not band.lower < band.upper:
                    raise ConfigurationError(f"{pid} level {band.level_number}: lower must be < upper")
                if not band.level_name:
                    raise ConfigurationError(f"{pid} level {band.level_number}: empty level name")
            if bands[0].lower != 0.0:
                raise ConfigurationError(f"{pid}: first band must start at 0, got {bands[0].lower}")
            if bands[-1].upper != math.inf:
                raise ConfigurationError(f"{pid}: last band must be open above (upper = inf)")
            for prev, nxt in zip(bands, bands[1:]):
                if prev.upper != nxt.lower:
                    raise ConfigurationError(
                        f"{pid}: gap between level {prev.level_number} (upper {prev.upper}) "
                        f"and level {nxt.level_number} (lower {nxt.lower})"
                    )
            table[pid] = bands
        self._table = table

    def pollutants(self) -> tuple[str, ...]:
        return tuple(self._table)

    def has(self, pollutant_id: str) -> bool:
        return pollutant_id in self._table

    def bands_for(self, pollutant_id: str) -> tuple[Band, ...]:
        try:
            return self._table[pollutant_id]
        except KeyError:
            raise ConfigurationError(f"no breakpoint bands for pollutant {pollutant_id!r}") from None


def classify_level(avg: float, pollutant_id: str, table: BreakpointTable) -> Band:
    """Return the unique band containing the average (boundaries belong to
    the upper band; the last band is closed above at +inf)."""
    if not avg >= 0.0:
        raise ValueError(f"{pollutant_id}: cannot classify a negative average ({avg})")
    for band in table.bands_for(pollutant_id):
        if band.lower <= avg < band.upper:
            return band
    raise AssertionError("bands partition [0, inf); unreachable")


# -- typed views over the cascade's complex events ---------------------------

@dataclass(frozen=True, slots=True)
class AggregateEvent:
    """Stage-1 output: windowed summary of one pollutant in one cell."""

    epoch_time: float
    cell: GridCell
    pollutant: str
    avg: float
    min: float
    max: float
    count: int

    def __post_init__(self) -> None:
        if not (self.min <= self.avg <= self.max):
            raise ValueError(f"aggregate violates min <= avg <= max: {self}")
        if self.count < 1:
            raise ValueError("aggregate count must be >= 1")

    @classmethod
    def from_complex(cls, ce: ComplexEvent) -> "AggregateEvent":
        p = ce.payload
        return cls(ce.epoch_time, ce.cell, p["pollutant"], p["avg"], p["min"], p["max"], p["count"])


@dataclass(frozen=True, slots=True)
class PollutantLevelEvent:
    """Stage-2 output: one pollutant's level in one cell."""

    epoch_time: float
    cell: GridCell
    pollutant: str
    level_number: int
    level_name: str

    def __post_init__(self) -> None:
        if not 1 <= self.level_number <= N_LEVELS:
            raise ValueError(f"level_number out of range: {self.level_number}")

    @classmethod
    def from_complex(cls, ce: ComplexEvent) -> "PollutantLevelEvent":
        p = ce.payload
        return cls(ce.epoch_time, ce.cell, p["pollutant"], p["level_number"], p["level_name"])


@dataclass(frozen=True, slots=True)
class AirQualityEvent:
    """Stage-3 output: the cell's air-quality level on a 30-minute boundary."""

    epoch_time: float
    cell: GridCell
    aqi_level: int
    dominant_pollutant: str

    def __post_init__(self) -> None:
        if not 1 <= self.aqi_level <= N_LEVELS:
            raise ValueError(f"aqi_level out of range: {self.aqi_level}")

    @classmethod
    def from_complex(cls, ce: ComplexEvent) -> "AirQualityEvent":
        p = ce.payload
        return cls(ce.epoch_time, ce.cell, int(p["level"]), p["dominant"])


# -- pattern builders --------------------------------------------------------

def build_aggregation_patterns(catalog: "Catalog") -> list[PatternSpec]:
    """One aggregation pattern per catalog pollutant, keyed by grid cell.

    The window is the pollutant's averaging period. By default windows
    tumble (emit = window); setting the catalog's aggregate_emit_seconds
    turns them into sliding windows emitting on that cadence.
    """
    specs = []
    for p in catalog.pollutants:
        window = float(p.window_seconds)
        emit = float(catalog.aggregate_emit_seconds) if catalog.aggregate_emit_seconds else window
        specs.append(PatternSpec(
            name=f"aggregate_{p.id.lower()}",
            input_stream=SIMPLE_STREAM,
            output_stream=AGGREGATE_STREAM,
            window_seconds=window,
            emit_seconds=emit,
            aggregate=AVG,
            value_field="value",
            tag_field="pollutant",
            filter=FilterSpec(tag=p.id, lower=0.0, drop_sentinel=True),
            extra_payload=(("pollutant", p.id),),
        ))
    if not specs:
        log.warning("catalog has no pollutants; no aggregation patterns built")
    return specs


def build_level_patterns(catalog: "Catalog", table: BreakpointTable | None = None) -> list[PatternSpec]:
    """Six level patterns per pollutant, each firing when the aggregate
    average falls inside its band. Pollutants flagged aggregation-only are
    skipped; any other pollutant without bands is a configuration error."""
    if table is None:
        table = catalog.breakpoints
    specs = []
    for p in catalog.pollutants:
        if not table.has(p.id):
            if p.id in catalog.aggregation_only:
                continue
            raise ConfigurationError(f"no breakpoint bands for pollutant {p.id!r}")
        for band in table.bands_for(p.id):
            upper = None if band.upper == math.inf else band.upper
            specs.append(PatternSpec(
                name=f"level_{p.id.lower()}_{band.level_number}",
                input_stream=AGGREGATE_STREAM,
                output_stream=LEVEL_STREAM,
                window_seconds=float(catalog.cascade_slot_seconds),
                emit_seconds=float(catalog.cascade_slot_seconds),
                aggregate=AVG,
                value_field="avg",
                tag_field="pollutant",
                filter=FilterSpec(tag=p.id, lower=band.lower, upper=upper),
                extra_payload=(
                    ("level_name", band.level_name),
                    ("level_number", band.level_number),
                    ("pollutant", p.id),
                ),
            ))
    return specs


def build_aqi_pattern(catalog: "Catalog") -> PatternSpec:
    """The per-cell max-level pattern over 30-minute slots; level ties go
    to the pollutant listed first in the catalog."""
    return PatternSpec(
        name="air_quality",
        input_stream=LEVEL_STREAM,
        output_stream=AQI_STREAM,
        window_seconds=float(catalog.cascade_slot_seconds),
        emit_seconds=float(catalog.cascade_slot_seconds),
        aggregate=ARGMAX_LEVEL,
        value_field="level_number",
        tag_field="pollutant",
        tag_priority=tuple(p.id for p in catalog.pollutants),
    )


def build_cascade(catalog: "Catalog") -> list[PatternSpec]:
    """All cascade patterns in registration (= chain) order."""
    specs = build_aggregation_patterns(catalog)
    specs.extend(build_level_patterns(catalog))
    specs.append(build_aqi_pattern(catalog))
    return specs


def to_engine_events(events: Iterable[SimpleEvent], resolution_deg: float) -> Iterator[EngineEvent]:
    """Wrap normalized events for the engine, quantizing locations once."""
    for ev in events:
        yield EngineEvent(
            SIMPLE_STREAM,
            ev.epoch_time,
            cell_of(ev.location, resolution_deg),
            {"value": ev.value, "pollutant": ev.pollutant},
        )
