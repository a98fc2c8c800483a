"""Command-line interface: run, synth, validate, bench.

Exit codes: 0 success, 1 configuration or format error, 2 insufficient data.
"""

from __future__ import annotations

import argparse
import glob
import sys
from pathlib import Path

from . import output, pipeline, synth, validation
from .catalog import Catalog, default_catalog, load_catalog
from .errors import ConfigurationError, CsvFormatError, InsufficientDataError
from .ingest import parse_station_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INSUFFICIENT = 2


def _load_catalog(path: str | None) -> Catalog:
    return load_catalog(path) if path else default_catalog()


def _expand_inputs(patterns: list[str]) -> tuple[Path, ...]:
    files: list[Path] = []
    for pattern in patterns:
        matched = sorted(glob.glob(pattern))
        if matched:
            files.extend(Path(m) for m in matched)
        else:
            files.append(Path(pattern))
    return tuple(files)


def _parse_hotspots(text: str) -> list[tuple[float, float]]:
    try:
        spots = []
        for chunk in text.split(";"):
            lat, lon = chunk.split(",")
            spots.append((float(lat), float(lon)))
        return spots
    except ValueError:
        raise ConfigurationError(f"cannot parse hotspots {text!r}; expected 'lat,lon;lat,lon'") from None


def _level_policy(text: str) -> str | int:
    if text == "lowest":
        return text
    try:
        index = int(text)
    except ValueError:
        raise ConfigurationError(f"level policy must be 'lowest' or an index 0-11, got {text!r}") from None
    if not 0 <= index <= 11:
        raise ConfigurationError(f"level index out of range 0-11: {index}")
    return index


def cmd_run(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    inputs = _expand_inputs(args.input)
    if not inputs:
        raise ConfigurationError("no input files")
    config = pipeline.RunConfig(
        catalog=catalog,
        region=args.region,
        inputs=inputs,
        out_dir=Path(args.out),
        level_policy=_level_policy(args.level_policy),
    )
    result = pipeline.run(config)
    r = result.report
    print(f"rows read:        {r.rows_read}")
    print(f"rows dropped:     {r.dropped_total()} "
          f"(malformed {r.rows_dropped_malformed}, empty {r.rows_dropped_empty}, "
          f"range {r.rows_dropped_range}, bbox {r.rows_dropped_bbox}, "
          f"duplicate {r.rows_dropped_duplicate})")
    print(f"events fused:     {r.rows_emitted}")
    print(f"aggregates:       {len(result.aggregates)}")
    print(f"levels:           {len(result.levels)}")
    print(f"air quality:      {len(result.air_quality)}")
    print(f"wall time:        {result.bench.wall_time_s:.3f} s")
    print(f"outputs in:       {Path(args.out)}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    hotspots = _parse_hotspots(args.hotspots) if args.hotspots else None
    result = synth.generate_corpus(
        args.out,
        catalog,
        args.region,
        n_plots=args.n_plots,
        seed=args.seed,
        hotspots=hotspots,
        start_epoch=args.start_epoch,
        duration_s=args.duration,
        empty_fraction=args.empty_fraction,
    )
    print(f"wrote {result.rows_written} rows across {len(result.plot_paths)} plot files")
    if args.pairs > 0:
        box = catalog.region(args.region)
        sat_path, station_path = synth.generate_paired_series(
            args.out,
            box,
            n_pairs=args.pairs,
            seed=args.seed,
            slope=args.pair_slope,
            intercept=args.pair_intercept,
            noise_sd=args.pair_noise_sd,
            sat_mean=args.pair_sat_mean,
            sat_sd=args.pair_sat_sd,
            pollutant=args.pair_pollutant,
            start_epoch=args.start_epoch,
        )
        expected = synth.expected_pairing_r(args.pair_slope, args.pair_sat_sd, args.pair_noise_sd)
        print(f"wrote paired series ({args.pairs} pairs, expected r = {expected:.4f}):")
        print(f"  satellite: {sat_path}")
        print(f"  stations:  {station_path}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    observations, _ = parse_station_csv(args.station_csv, catalog.pollutant_ids())
    resolution = catalog.grid_resolution_deg
    if args.mode == "level":
        sat_samples = output.read_air_quality_csv(args.sat_csv, resolution)
        station_samples = validation.station_level_samples(
            observations, catalog.breakpoints, args.time_quantum
        )
    else:
        sat_samples = output.read_aggregates_csv(args.sat_csv, args.pollutant, resolution)
        station_samples = validation.station_concentration_samples(observations, args.pollutant)
    report = validation.validate(sat_samples, station_samples, args.max_km, args.time_quantum)
    if args.out:
        output.write_pairs_csv(args.out, report.pairs)
    print(f"pairs={report.pair_count} r={report.r:.4f} "
          f"unmatched_sat={report.unmatched_sat} unmatched_station={report.unmatched_station}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    result = pipeline.run_benchmark(
        catalog, args.region, args.out, n_events=args.n_events, seed=args.seed
    )
    b = result.bench
    print(f"input events:   {b.input_events}")
    print(f"output events:  {b.output_events}")
    print(f"wall time:      {b.wall_time_s:.3f} s (17 s envelope)")
    print(f"peak RSS:       {b.peak_rss_bytes / 1e9:.3f} GB (4 GB envelope)")
    print(f"output bytes:   {b.output_bytes}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aqstream",
        description="Air-quality event cascade over satellite-derived trace-gas measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="ingest plot CSVs and run the cascade")
    p_run.add_argument("--catalog", help="catalog JSON (defaults to the packaged catalog)")
    p_run.add_argument("--region", required=True, help="region name from the catalog")
    p_run.add_argument("--input", action="append", required=True,
                       help="plot CSV path or glob (repeatable)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--level-policy", default="lowest",
                       help="'lowest' (default) or an altitude slice index 0-11")
    p_run.set_defaults(func=cmd_run)

    p_synth = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p_synth.add_argument("--catalog")
    p_synth.add_argument("--region", required=True)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--n-plots", type=int, default=10_000,
                         help="total rows across all pollutant files")
    p_synth.add_argument("--hotspots", help="plume centers 'lat,lon;lat,lon'")
    p_synth.add_argument("--start-epoch", type=int, default=synth.DEFAULT_START_EPOCH)
    p_synth.add_argument("--duration", type=int, default=synth.DEFAULT_DURATION_S)
    p_synth.add_argument("--empty-fraction", type=float, default=0.0)
    p_synth.add_argument("--pairs", type=int, default=0,
                         help="also write a paired satellite/station validation fixture")
    p_synth.add_argument("--pair-slope", type=float, default=1.0)
    p_synth.add_argument("--pair-intercept", type=float, default=0.0)
    p_synth.add_argument("--pair-noise-sd", type=float, default=0.0)
    p_synth.add_argument("--pair-sat-mean", type=float, default=5.0)
    p_synth.add_argument("--pair-sat-sd", type=float, default=1.0)
    p_synth.add_argument("--pair-pollutant", default="CO")
    p_synth.set_defaults(func=cmd_synth)

    p_val = sub.add_parser("validate", help="compare satellite output against station data")
    p_val.add_argument("sat_csv", help="air-quality CSV (level mode) or aggregates CSV (concentration mode)")
    p_val.add_argument("station_csv")
    p_val.add_argument("--catalog")
    p_val.add_argument("--mode", choices=("level", "concentration"), default="level")
    p_val.add_argument("--pollutant", help="restrict concentration mode to one pollutant")
    p_val.add_argument("--max-km", type=float, default=validation.DEFAULT_MAX_KM)
    p_val.add_argument("--time-quantum", type=float, default=validation.DEFAULT_TIME_QUANTUM_S)
    p_val.add_argument("--out", help="write the matched pairs CSV here")
    p_val.set_defaults(func=cmd_validate)

    p_bench = sub.add_parser("bench", help="synthesize a corpus and benchmark the cascade")
    p_bench.add_argument("--catalog")
    p_bench.add_argument("--region", required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--n-events", type=int, default=150_000)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, CsvFormatError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT


if __name__ == "__main__":
    sys.exit(main())
