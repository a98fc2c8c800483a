"""aqstream: near-real-time air-quality monitoring over satellite trace-gas data.

Ingests fused measurement CSVs, normalizes units, runs a three-stage
complex-event cascade (gas aggregation, pollutant level, air-quality
level) on a deterministic event-time window engine, and validates the
derived air-quality index against ground-station observations.
"""

from .catalog import Catalog, default_catalog, load_catalog
from .engine import (
    AGGREGATES,
    ComplexEvent,
    Engine,
    EngineEvent,
    FilterSpec,
    PatternSpec,
    aggregate_window,
    load_pattern_specs,
    save_pattern_specs,
)
from .errors import (
    ConfigurationError,
    CorrelationUndefinedError,
    CsvFormatError,
    InsufficientDataError,
    UnitError,
)
from .ingest import BoundingBox, IngestReport, QualityRange, fuse, parse_plot_csv, parse_station_csv
from .model import (
    GeoPoint,
    GridCell,
    PlotRecord,
    Pollutant,
    SimpleEvent,
    StationObservation,
    cell_center,
    cell_of,
)
from .patterns import (
    AggregateEvent,
    AirQualityEvent,
    Band,
    BreakpointTable,
    PollutantLevelEvent,
    build_aggregation_patterns,
    build_aqi_pattern,
    build_cascade,
    build_level_patterns,
    classify_level,
)
from .pipeline import RunConfig, RunResult, ingest_sources, run, run_benchmark
from .validation import (
    MatchedPair,
    ValidationReport,
    great_circle_km,
    match_pairs,
    pearson,
    validate,
)

__version__ = "0.1.0"
