import csv
import math

import pytest

from aqstream.catalog import catalog_from_dict, default_catalog
from aqstream.errors import ConfigurationError
from aqstream.pipeline import RunConfig, ingest_sources, run, run_benchmark
from aqstream.synth import generate_corpus

CATALOG = default_catalog()
T0 = 1_600_002_000

PLOT_HEADER = ("EpochTime", "DateTime", "Longitude", "Latitude") + tuple(
    f"Level{i}" for i in range(1, 13)
)


def write_plot(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PLOT_HEADER)
        for epoch, lon, lat, value in rows:
            levels = [value] + ["-0.0"] * 11
            w.writerow((epoch, "", lon, lat, *levels))
    return path


class TestIngestSources:
    def test_filters_and_counts(self, tmp_path):
        rows = [
            (T0 + 10, -5.8, 35.7, "2.5"),        # kept
            (T0 + 20, -5.8, 35.7, "-0.0"),       # empty
            (T0 + 30, -5.8, 35.7, "5000.0"),     # out of CO quality range [0, 1000]
            (T0 + 40, -5.8, 60.0, "2.5"),        # outside morocco bbox
            (T0 + 50, -5.8, "oops", "2.5"),      # malformed
            (T0 + 10, -5.8, 35.7, "2.5"),        # duplicate of the first
        ]
        path = write_plot(tmp_path / "plots_CO.csv", rows)
        events, report = ingest_sources(CATALOG, [path], "morocco")
        assert len(events) == 1
        assert report.rows_read == 6
        assert report.rows_dropped_empty == 1
        assert report.rows_dropped_range == 1
        assert report.rows_dropped_bbox == 1
        assert report.rows_dropped_malformed == 1
        assert report.rows_dropped_duplicate == 1
        assert report.rows_emitted == 1
        assert report.reconciles()

    def test_column_variable_converted(self, tmp_path):
        # CO_COLUMN_KG carries kg/m2; 15800 kg/m2 -> TCA 1.0 -> 28.01/29 PPMv.
        path = write_plot(tmp_path / "plots_CO_COLUMN_KG.csv", [(T0 + 10, -5.8, 35.7, "15800")])
        events, report = ingest_sources(CATALOG, [path], "morocco")
        assert len(events) == 1
        assert events[0].pollutant == "CO"
        assert events[0].value == pytest.approx(28.01 / 29.0)

    def test_unknown_variable_file_fatal(self, tmp_path):
        path = write_plot(tmp_path / "plots_MYSTERY.csv", [(T0, -5.8, 35.7, "1")])
        with pytest.raises(ConfigurationError):
            ingest_sources(CATALOG, [path], "morocco")

    def test_level_policy_index(self, tmp_path):
        path = tmp_path / "plots_CO.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PLOT_HEADER)
            levels = ["1.0", "2.0"] + ["-0.0"] * 10
            w.writerow((T0 + 10, "", -5.8, 35.7, *levels))
        events, _ = ingest_sources(CATALOG, [path], "morocco", level_policy=1)
        assert events[0].value == 2.0

    def test_sources_fused_in_time_order(self, tmp_path):
        a = write_plot(tmp_path / "a_CO.csv", [(T0 + 30, -5.8, 35.7, "1.0")])
        b = write_plot(tmp_path / "b_CO.csv", [(T0 + 10, -5.8, 35.7, "2.0")])
        events, _ = ingest_sources(CATALOG, [a, b], "morocco")
        assert [e.epoch_time for e in events] == [T0 + 10, T0 + 30]


class TestRun:
    def test_end_to_end_outputs(self, tmp_path):
        corpus = generate_corpus(tmp_path / "corpus", CATALOG, "morocco", n_plots=2000, seed=11)
        config = RunConfig(CATALOG, "morocco", tuple(corpus.plot_paths), tmp_path / "out")
        result = run(config)
        assert result.report.rows_read == 2000
        assert result.aggregates and result.levels and result.air_quality
        for name in ("aggregates", "levels", "air_quality", "geojson", "bench"):
            assert result.paths[name].exists()
        assert result.bench.input_events == 2000
        assert result.bench.output_events == (
            len(result.aggregates) + len(result.levels) + len(result.air_quality)
        )
        assert result.late_events == 0

    def test_deterministic_across_runs(self, tmp_path):
        corpus = generate_corpus(tmp_path / "corpus", CATALOG, "morocco", n_plots=1500, seed=12)
        out_a = run(RunConfig(CATALOG, "morocco", tuple(corpus.plot_paths), tmp_path / "a"))
        out_b = run(RunConfig(CATALOG, "morocco", tuple(corpus.plot_paths), tmp_path / "b"))
        for name in ("aggregates", "levels", "air_quality", "geojson"):
            assert out_a.paths[name].read_bytes() == out_b.paths[name].read_bytes()

    def test_input_order_permutation_invariant(self, tmp_path):
        corpus = generate_corpus(tmp_path / "corpus", CATALOG, "morocco", n_plots=1500, seed=13)
        forward = tuple(corpus.plot_paths)
        backward = tuple(reversed(corpus.plot_paths))
        out_a = run(RunConfig(CATALOG, "morocco", forward, tmp_path / "a"))
        out_b = run(RunConfig(CATALOG, "morocco", backward, tmp_path / "b"))
        for name in ("aggregates", "levels", "air_quality", "geojson"):
            assert out_a.paths[name].read_bytes() == out_b.paths[name].read_bytes()

    def test_no_inputs_is_config_error(self, tmp_path):
        with pytest.raises(ConfigurationError):
            run(RunConfig(CATALOG, "morocco", (), tmp_path / "out"))

    def test_missing_input_is_config_error(self, tmp_path):
        with pytest.raises(ConfigurationError):
            run(RunConfig(CATALOG, "morocco", (tmp_path / "nope.csv",), tmp_path / "out"))

    def test_ce3_rows_bounded_by_cells_times_slots(self, tmp_path):
        corpus = generate_corpus(tmp_path / "corpus", CATALOG, "morocco", n_plots=1000, seed=14)
        result = run(RunConfig(CATALOG, "morocco", tuple(corpus.plot_paths), tmp_path / "out"))
        cells = {e.cell for e in result.air_quality}
        times = [e.epoch_time for e in result.air_quality]
        n_slots = (max(times) - min(times)) / CATALOG.cascade_slot_seconds + 1
        assert len(result.air_quality) <= len(cells) * n_slots


class TestRunBenchmark:
    def test_small_benchmark_populates_report(self, tmp_path):
        result = run_benchmark(CATALOG, "spain", tmp_path, n_events=1200, seed=5)
        b = result.bench
        assert b.input_events == 1200
        assert b.output_events > 0
        assert b.wall_time_s > 0
        assert b.peak_rss_bytes > 0
        assert b.output_bytes > 0
