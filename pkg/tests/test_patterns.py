import math

import pytest
from hypothesis import given, settings, strategies as st

from aqstream.catalog import default_catalog
from aqstream.engine import Engine
from aqstream.errors import ConfigurationError
from aqstream.model import GeoPoint, SimpleEvent
from aqstream.patterns import (
    AGGREGATE_STREAM,
    AQI_STREAM,
    LEVEL_STREAM,
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
    to_engine_events,
)

CATALOG = default_catalog()
T0 = 1_600_002_000  # aligned to the 30-min grid

LEVEL_NAMES_6 = ("Good", "Moderate", "USG", "Unhealthy", "Very Unhealthy", "Hazardous")


def bands(*uppers):
    lowers = (0.0,) + uppers
    highs = uppers + (math.inf,)
    return [
        Band(lo, hi, i + 1, LEVEL_NAMES_6[i])
        for i, (lo, hi) in enumerate(zip(lowers, highs))
    ]


class TestBreakpointTable:
    def test_valid_table(self):
        table = BreakpointTable({"CO": bands(4.5, 9.5, 12.5, 15.5, 30.5)})
        assert table.has("CO")
        assert len(table.bands_for("CO")) == 6

    def test_wrong_band_count(self):
        with pytest.raises(ConfigurationError):
            BreakpointTable({"CO": bands(4.5, 9.5, 12.5, 15.5, 30.5)[:5]})

    def test_gap_rejected(self):
        bad = bands(4.5, 9.5, 12.5, 15.5, 30.5)
        bad[2] = Band(10.0, 12.5, 3, "USG")  # gap: 9.5 -> 10.0
        with pytest.raises(ConfigurationError) as err:
            BreakpointTable({"CO": bad})
        assert "CO" in str(err.value) and "level" in str(err.value)

    def test_must_start_at_zero(self):
        bad = bands(4.5, 9.5, 12.5, 15.5, 30.5)
        bad[0] = Band(1.0, 4.5, 1, "Good")
        with pytest.raises(ConfigurationError):
            BreakpointTable({"CO": bad})

    def test_must_be_open_above(self):
        bad = bands(4.5, 9.5, 12.5, 15.5, 30.5)
        bad[5] = Band(30.5, 100.0, 6, "Hazardous")
        with pytest.raises(ConfigurationError):
            BreakpointTable({"CO": bad})

    def test_levels_must_be_1_to_6(self):
        bad = bands(4.5, 9.5, 12.5, 15.5, 30.5)
        bad[1] = Band(4.5, 9.5, 3, "Moderate")
        with pytest.raises(ConfigurationError):
            BreakpointTable({"CO": bad})


class TestClassifyLevel:
    def test_fixture_bands_good(self):
        table = BreakpointTable({"CO": bands(4.5, 9.5, 12.5, 15.5, 30.5)})
        band = classify_level(2.0, "CO", table)
        assert band.level_number == 1 and band.level_name == "Good"

    def test_index_scale_moderate_51_200(self):
        # An index-style table where Moderate spans 51-200.
        table = BreakpointTable({"IDX": bands(51.0, 201.0, 301.0, 401.0, 501.0)})
        band = classify_level(120.0, "IDX", table)
        assert band.level_name == "Moderate"

    def test_boundary_goes_to_upper_band(self):
        table = BreakpointTable({"CO": bands(4.5, 9.5, 12.5, 15.5, 30.5)})
        assert classify_level(4.5, "CO", table).level_number == 2

    def test_negative_rejected(self):
        table = BreakpointTable({"CO": bands(4.5, 9.5, 12.5, 15.5, 30.5)})
        with pytest.raises(ValueError):
            classify_level(-1.0, "CO", table)

    def test_huge_value_is_hazardous(self):
        table = BreakpointTable({"CO": bands(4.5, 9.5, 12.5, 15.5, 30.5)})
        assert classify_level(1e12, "CO", table).level_number == 6

    @settings(max_examples=200)
    @given(st.floats(min_value=0, max_value=1e9, allow_nan=False))
    def test_exactly_one_band_matches(self, value):
        for p in CATALOG.pollutants:
            matches = [
                b for b in CATALOG.breakpoints.bands_for(p.id)
                if b.lower <= value < b.upper
            ]
            assert len(matches) == 1
            assert classify_level(value, p.id, CATALOG.breakpoints) == matches[0]

    @given(
        st.floats(min_value=0, max_value=1e6, allow_nan=False),
        st.floats(min_value=0, max_value=1e6, allow_nan=False),
    )
    def test_monotone_in_average(self, a, b):
        lo, hi = min(a, b), max(a, b)
        table = CATALOG.breakpoints
        assert classify_level(lo, "CO", table).level_number <= classify_level(hi, "CO", table).level_number


class TestBuilders:
    def test_nine_aggregation_specs(self):
        specs = build_aggregation_patterns(CATALOG)
        assert len(specs) == 9
        assert all(s.input_stream == "simple" and s.output_stream == AGGREGATE_STREAM for s in specs)

    def test_windows_follow_catalog(self):
        by_name = {s.name: s for s in build_aggregation_patterns(CATALOG)}
        assert by_name["aggregate_co"].window_seconds == 8 * 3600
        assert by_name["aggregate_so2"].window_seconds == 3600
        assert by_name["aggregate_pm25"].window_seconds == 24 * 3600

    def test_default_windows_tumble(self):
        for s in build_aggregation_patterns(CATALOG):
            assert s.emit_seconds == s.window_seconds
            assert not s.sliding

    def test_fifty_four_level_specs(self):
        specs = build_level_patterns(CATALOG)
        assert len(specs) == 54
        assert all(s.window_seconds == s.emit_seconds == 1800 for s in specs)

    def test_level_spec_error_names_pollutant(self):
        table = BreakpointTable({p.id: CATALOG.breakpoints.bands_for(p.id)
                                 for p in CATALOG.pollutants if p.id != "SO2"})
        with pytest.raises(ConfigurationError) as err:
            build_level_patterns(CATALOG, table)
        assert "SO2" in str(err.value)

    def test_aggregation_only_pollutant_skipped(self):
        import dataclasses
        table = BreakpointTable({p.id: CATALOG.breakpoints.bands_for(p.id)
                                 for p in CATALOG.pollutants if p.id != "CH4"})
        catalog = dataclasses.replace(CATALOG, aggregation_only=frozenset({"CH4"}))
        specs = build_level_patterns(catalog, table)
        assert len(specs) == 48

    def test_aqi_pattern(self):
        spec = build_aqi_pattern(CATALOG)
        assert spec.input_stream == LEVEL_STREAM
        assert spec.output_stream == AQI_STREAM
        assert spec.window_seconds == spec.emit_seconds == 1800
        assert spec.tag_priority == CATALOG.pollutant_ids()

    @settings(max_examples=200)
    @given(st.floats(min_value=0, max_value=1e9, allow_nan=False))
    def test_level_band_partition_over_specs(self, avg):
        specs = build_level_patterns(CATALOG)
        for p in CATALOG.pollutants:
            matching = [
                s for s in specs
                if s.filter.accepts(avg, p.id)
            ]
            assert len(matching) == 1, f"{p.id} avg={avg}"


def run_cascade(events, catalog=CATALOG):
    engine = Engine()
    engine.register_all(build_cascade(catalog))
    fired = []
    for engine_event in to_engine_events(events, catalog.grid_resolution_deg):
        fired += engine.on_event(engine_event)
    fired += engine.flush(math.inf)
    stream_of = {s.name: s.output_stream for s in engine.patterns}
    ce1 = [AggregateEvent.from_complex(ce) for ce in fired if stream_of[ce.pattern] == AGGREGATE_STREAM]
    ce2 = [PollutantLevelEvent.from_complex(ce) for ce in fired if stream_of[ce.pattern] == LEVEL_STREAM]
    ce3 = [AirQualityEvent.from_complex(ce) for ce in fired if stream_of[ce.pattern] == AQI_STREAM]
    return ce1, ce2, ce3


class TestCascade:
    def test_hand_computed_trace(self):
        here = GeoPoint(35.7, -5.8)
        events = [
            SimpleEvent(T0 + 100, here, "CO", 2.0),
            SimpleEvent(T0 + 200, here, "CO", 3.0),
            SimpleEvent(T0 + 400, here, "CO", 16.0),
            SimpleEvent(T0 + 150, here, "O3", 0.09),
            SimpleEvent(T0 + 100, here, "SO2", 0.01),
        ]
        ce1, ce2, ce3 = run_cascade(sorted(events, key=lambda e: e.epoch_time))

        assert len(ce1) == 3
        co1 = next(e for e in ce1 if e.pollutant == "CO")
        # CO window is 8 h tumbling on the absolute grid.
        assert co1.epoch_time == math.floor((T0 + 100) / 28800) * 28800 + 28800
        assert co1.avg == pytest.approx(7.0)
        assert co1.min == 2.0 and co1.max == 16.0 and co1.count == 3

        assert len(ce2) == 3
        by_pollutant = {e.pollutant: e for e in ce2}
        assert by_pollutant["CO"].level_number == 2      # 7.0 in [4.5, 9.5)
        assert by_pollutant["O3"].level_number == 4      # 0.09 in [0.086, 0.106)
        assert by_pollutant["SO2"].level_number == 1     # 0.01 in [0, 0.036)
        # CE2 fires one cascade slot after its CE1.
        assert by_pollutant["CO"].epoch_time == co1.epoch_time + 1800

        # SO2's 1 h window closes long before the 8 h windows, so its slot
        # stands alone; CO and O3 share a slot and O3 (level 4) dominates.
        assert len(ce3) == 2
        first, second = sorted(ce3, key=lambda e: e.epoch_time)
        assert first.aqi_level == 1 and first.dominant_pollutant == "SO2"
        assert second.aqi_level == 4 and second.dominant_pollutant == "O3"
        assert second.epoch_time == by_pollutant["CO"].epoch_time + 1800

    def test_ce3_timestamps_on_half_hour_grid(self):
        here = GeoPoint(35.7, -5.8)
        events = sorted(
            (SimpleEvent(T0 + 977 * i, here, "SO2", 0.01 * (i % 3)) for i in range(40)),
            key=lambda e: e.epoch_time,
        )
        _, _, ce3 = run_cascade(events)
        assert ce3
        assert all(e.epoch_time % 1800 == 0 for e in ce3)

    def test_every_ce2_traces_to_one_ce1(self):
        here = GeoPoint(35.7, -5.8)
        events = sorted(
            (SimpleEvent(T0 + 700 * i, here, p, v)
             for i, (p, v) in enumerate([("CO", 1.0), ("O3", 0.05), ("CO", 6.0), ("SO2", 0.2)])),
            key=lambda e: e.epoch_time,
        )
        ce1, ce2, ce3 = run_cascade(events)
        ce1_keys = {(e.pollutant, e.cell, e.epoch_time) for e in ce1}
        assert len(ce2) == len(ce1)
        for e in ce2:
            assert (e.pollutant, e.cell, e.epoch_time - 1800) in ce1_keys

    def test_ce3_is_max_of_ce2_levels_in_slot(self):
        here = GeoPoint(35.7, -5.8)
        events = sorted(
            (SimpleEvent(T0 + 137 * i, here, p, v)
             for i, (p, v) in enumerate(
                 [("SO2", 0.04), ("NO2", 0.2), ("NOX", 0.01), ("SO2", 0.05)] * 3)),
            key=lambda e: e.epoch_time,
        )
        _, ce2, ce3 = run_cascade(events)
        slots = {}
        for e in ce2:
            slot = math.floor(e.epoch_time / 1800) * 1800 + 1800
            slots.setdefault((e.cell, slot), []).append(e.level_number)
        assert len(ce3) == len(slots)
        for e in ce3:
            assert e.aqi_level == max(slots[(e.cell, e.epoch_time)])

    def test_aqi_tie_break_by_catalog_order(self):
        here = GeoPoint(35.7, -5.8)
        # NO2 precedes SO2 in the catalog; values chosen to tie at level 2.
        events = sorted(
            [SimpleEvent(T0 + 100, here, "SO2", 0.05),
             SimpleEvent(T0 + 200, here, "NO2", 0.06)],
            key=lambda e: e.epoch_time,
        )
        _, ce2, ce3 = run_cascade(events)
        assert {e.level_number for e in ce2} == {2}
        assert len(ce3) == 1
        assert ce3[0].aqi_level == 2
        assert ce3[0].dominant_pollutant == "NO2"

    def test_separate_cells_do_not_mix(self):
        a = GeoPoint(35.7, -5.8)
        b = GeoPoint(30.1, -8.9)
        events = sorted(
            [SimpleEvent(T0 + 100, a, "CO", 2.0), SimpleEvent(T0 + 200, b, "CO", 20.0)],
            key=lambda e: e.epoch_time,
        )
        ce1, _, ce3 = run_cascade(events)
        assert len(ce1) == 2
        avgs = sorted(e.avg for e in ce1)
        assert avgs == [2.0, 20.0]
        assert len(ce3) == 2


class TestTypedViews:
    def test_aggregate_event_invariant(self):
        from aqstream.model import GridCell
        with pytest.raises(ValueError):
            AggregateEvent(0, GridCell(0, 0), "CO", avg=5.0, min=6.0, max=7.0, count=1)
        with pytest.raises(ValueError):
            AggregateEvent(0, GridCell(0, 0), "CO", avg=6.0, min=5.0, max=7.0, count=0)

    def test_level_event_range(self):
        from aqstream.model import GridCell
        with pytest.raises(ValueError):
            PollutantLevelEvent(0, GridCell(0, 0), "CO", 7, "x")

    def test_aqi_event_range(self):
        from aqstream.model import GridCell
        with pytest.raises(ValueError):
            AirQualityEvent(0, GridCell(0, 0), 0, "CO")
