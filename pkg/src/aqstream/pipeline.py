"""End-to-end orchestration: parse and filter plot files, fuse sources,
drive the cascade, emit outputs.

The run follows a producer/consumer split: an ingestion thread parses,
filters, normalizes and fuses all sources, then streams the ordered
events over a queue; the calling thread owns the engine and the sinks.
Only immutable events cross the boundary, and the fused ordering is the
contract the engine's zero-lateness watermark relies on.
"""

from __future__ import annotations

import logging
import math
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import ingest, output, synth
from .catalog import Catalog
from .engine import ComplexEvent, Engine
from .errors import ConfigurationError, UnitError
from .model import SimpleEvent
from .patterns import (
    AGGREGATE_STREAM,
    AQI_STREAM,
    LEVEL_STREAM,
    AggregateEvent,
    AirQualityEvent,
    PollutantLevelEvent,
    build_cascade,
    to_engine_events,
)
from .units import normalize_to_engine_unit

log = logging.getLogger(__name__)

_QUEUE_CHUNKS = 64
_CHUNK_SIZE = 1024


@dataclass(frozen=True)
class RunConfig:
    catalog: Catalog
    region: str
    inputs: tuple[Path, ...]
    out_dir: Path
    level_policy: str | int = "lowest"
    lateness_seconds: float = 0.0


@dataclass
class RunResult:
    aggregates: list[AggregateEvent] = field(default_factory=list)
    levels: list[PollutantLevelEvent] = field(default_factory=list)
    air_quality: list[AirQualityEvent] = field(default_factory=list)
    report: ingest.IngestReport = field(default_factory=ingest.IngestReport)
    bench: output.BenchReport = field(default_factory=output.BenchReport)
    late_events: int = 0
    paths: dict = field(default_factory=dict)


def ingest_sources(
    catalog: Catalog,
    inputs: tuple[Path, ...] | list[Path],
    region: str,
    level_policy: str | int = "lowest",
) -> tuple[list[SimpleEvent], ingest.IngestReport]:
    """Parse, filter, normalize and fuse all plot files into one ordered
    event stream plus the consolidated row accounting."""
    box = catalog.region(region)
    report = ingest.IngestReport()
    sources = []
    for path in inputs:
        variable = ingest.infer_variable(Path(path).stem, catalog.variables)
        if variable is None:
            raise ConfigurationError(
                f"{path}: cannot infer a catalog variable from the file name"
            )
        var_spec = catalog.variables[variable]
        pollutant = catalog.pollutant(var_spec.pollutant)
        records, file_report = ingest.parse_plot_csv(path, variable)
        report.rows_read += file_report.rows_read
        report.rows_dropped_malformed += file_report.rows_dropped_malformed
        events = []
        for rec in records:
            if not ingest.filter_bbox(rec.location, box):
                report.rows_dropped_bbox += 1
                continue
            raw = ingest.select_level(rec, level_policy)
            if raw is None:
                report.rows_dropped_empty += 1
                continue
            if not ingest.filter_range(raw, rec.variable, catalog.quality_ranges):
                report.rows_dropped_range += 1
                continue
            try:
                value = normalize_to_engine_unit(raw, var_spec.unit, pollutant)
                event = SimpleEvent(rec.epoch_time, rec.location, pollutant.id, value)
            except UnitError:
                report.rows_dropped_malformed += 1
                continue
            except ValueError:
                report.rows_dropped_range += 1
                continue
            events.append(event)
        sources.append(events)
    fused, fuse_report = ingest.fuse(sources)
    report.rows_dropped_duplicate += fuse_report.rows_dropped_duplicate
    report.rows_emitted += fuse_report.rows_emitted
    return fused, report


def run(config: RunConfig) -> RunResult:
    """Execute the full cascade and write aggregates/levels/air-quality
    CSVs, the air-quality GeoJSON layer and the benchmark report."""
    if not config.inputs:
        raise ConfigurationError("no input files")
    for path in config.inputs:
        if not Path(path).exists():
            raise ConfigurationError(f"input file does not exist: {path}")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    result = RunResult()
    events_q: queue.Queue = queue.Queue(maxsize=_QUEUE_CHUNKS)
    failure: list[BaseException] = []

    def produce() -> None:
        try:
            fused, report = ingest_sources(
                config.catalog, config.inputs, config.region, config.level_policy
            )
            result.report = report
            for start in range(0, len(fused), _CHUNK_SIZE):
                events_q.put(fused[start:start + _CHUNK_SIZE])
        except BaseException as exc:  # surfaced on the consumer side
            failure.append(exc)
        finally:
            events_q.put(None)

    producer = threading.Thread(target=produce, name="ingest-producer", daemon=True)
    producer.start()

    engine = Engine(lateness_seconds=config.lateness_seconds)
    engine.register_all(build_cascade(config.catalog))
    resolution = config.catalog.grid_resolution_deg

    complex_events: list[ComplexEvent] = []
    on_event = engine.on_event
    while True:
        chunk = events_q.get()
        if chunk is None:
            break
        for engine_event in to_engine_events(chunk, resolution):
            fired = on_event(engine_event)
            if fired:
                complex_events.extend(fired)
    producer.join()
    if failure:
        raise failure[0]
    complex_events.extend(engine.flush(math.inf))

    stream_of = {spec.name: spec.output_stream for spec in engine.patterns}
    for ce in complex_events:
        stream = stream_of[ce.pattern]
        if stream == AGGREGATE_STREAM:
            result.aggregates.append(AggregateEvent.from_complex(ce))
        elif stream == LEVEL_STREAM:
            result.levels.append(PollutantLevelEvent.from_complex(ce))
        elif stream == AQI_STREAM:
            result.air_quality.append(AirQualityEvent.from_complex(ce))
    result.late_events = engine.late_events

    paths = {
        "aggregates": out_dir / "aggregates.csv",
        "levels": out_dir / "levels.csv",
        "air_quality": out_dir / "air_quality.csv",
        "geojson": out_dir / "air_quality.geojson",
        "bench": out_dir / "bench.json",
    }
    output.write_aggregates_csv(paths["aggregates"], result.aggregates)
    output.write_levels_csv(paths["levels"], result.levels)
    output.write_air_quality_csv(paths["air_quality"], result.air_quality)
    output.write_geojson(paths["geojson"], result.air_quality)

    wall = time.perf_counter() - t0
    out_bytes = sum(p.stat().st_size for name, p in paths.items() if name != "bench")
    result.bench = output.BenchReport(
        input_events=result.report.rows_read,
        output_events=len(complex_events),
        wall_time_s=round(wall, 6),
        peak_rss_bytes=output.peak_rss_bytes(),
        output_bytes=out_bytes,
    )
    output.write_bench_report(paths["bench"], result.bench)
    result.paths = paths

    log.info(
        "run complete: %d rows in, %d complex events out (%d/%d/%d), %.2fs",
        result.report.rows_read, len(complex_events),
        len(result.aggregates), len(result.levels), len(result.air_quality), wall,
    )
    return result


def run_benchmark(
    catalog: Catalog,
    region: str,
    out_dir,
    n_events: int = 150_000,
    seed: int = 0,
) -> RunResult:
    """Generate a seeded corpus of n_events rows and run the cascade over
    it, returning the run result with its benchmark report."""
    out_dir = Path(out_dir)
    corpus = synth.generate_corpus(out_dir / "corpus", catalog, region, n_events, seed)
    config = RunConfig(
        catalog=catalog,
        region=region,
        inputs=tuple(corpus.plot_paths),
        out_dir=out_dir / "results",
    )
    return run(config)
