import math

import pytest
from hypothesis import given, strategies as st

from aqstream.model import (
    GeoPoint,
    GridCell,
    PlotRecord,
    Pollutant,
    SimpleEvent,
    StationObservation,
    cell_center,
    cell_of,
    is_empty_value,
)


class TestGeoPoint:
    def test_valid(self):
        p = GeoPoint(35.76, -5.83)
        assert p.lat == 35.76 and p.lon == -5.83

    @pytest.mark.parametrize("lat,lon", [(91, 0), (-91, 0), (0, 181), (0, -181), (float("nan"), 0)])
    def test_out_of_range_rejected(self, lat, lon):
        with pytest.raises(ValueError):
            GeoPoint(lat, lon)

    def test_corners_allowed(self):
        GeoPoint(90, 180)
        GeoPoint(-90, -180)


class TestCellOf:
    def test_origin(self):
        # 90/0.05 and 180/0.05
        assert cell_of(GeoPoint(0, 0), 0.05) == GridCell(1800, 3600, 0.05)

    def test_lower_corner(self):
        assert cell_of(GeoPoint(-90, -180), 0.05) == GridCell(0, 0, 0.05)

    def test_hand_evaluated(self):
        # floor((35.76+90)/0.05) = 2515, floor((-5.83+180)/0.05) = 3483
        assert cell_of(GeoPoint(35.76, -5.83), 0.05) == GridCell(2515, 3483, 0.05)

    def test_bad_resolution(self):
        with pytest.raises(ValueError):
            cell_of(GeoPoint(0, 0), 0.0)

    def test_upper_edge_folds_into_last_cell(self):
        cell = cell_of(GeoPoint(90, 180), 0.05)
        assert cell == GridCell(3599, 7199, 0.05)
        center = cell_center(cell)
        assert -90 <= center.lat <= 90 and -180 <= center.lon <= 180

    @given(
        lat=st.floats(min_value=-90, max_value=90),
        lon=st.floats(min_value=-180, max_value=180),
    )
    def test_cell_contains_point(self, lat, lon):
        # Containment up to float rounding of the (coord + offset) / res
        # quantization; 1e-9 degrees is ~0.1 mm on the ground.
        res = 0.05
        eps = 1e-9
        cell = cell_of(GeoPoint(lat, lon), res)
        lo_lat = cell.row * res - 90
        lo_lon = cell.col * res - 180
        # Last row/col absorbs the upper boundary.
        assert lo_lat - eps <= lat <= lo_lat + res + eps
        assert lo_lon - eps <= lon <= lo_lon + res + eps

    @given(
        lat=st.floats(min_value=-89.99, max_value=89.99),
        lon=st.floats(min_value=-179.99, max_value=179.99),
    )
    def test_requantization_idempotent(self, lat, lon):
        res = 0.05
        cell = cell_of(GeoPoint(lat, lon), res)
        assert cell_of(cell_center(cell), res) == cell


class TestEmptySentinel:
    def test_negative_zero_is_empty(self):
        assert is_empty_value(-0.0)
        assert is_empty_value(float("-0.0"))

    def test_positive_zero_is_a_measurement(self):
        assert not is_empty_value(0.0)

    def test_nonfinite_is_empty(self):
        assert is_empty_value(float("nan"))
        assert is_empty_value(float("inf"))

    def test_regular_value(self):
        assert not is_empty_value(3.7)


class TestPollutant:
    def test_gas(self):
        p = Pollutant("CO", "PPMV", 8, molecular_weight=28.01)
        assert p.window_seconds == 28800

    def test_pm_has_no_mw(self):
        Pollutant("PM25", "UG_M3", 24)
        with pytest.raises(ValueError):
            Pollutant("PM25", "UG_M3", 24, molecular_weight=1.0)

    def test_gas_requires_mw(self):
        with pytest.raises(ValueError):
            Pollutant("CO", "PPMV", 8)

    def test_window_hours_domain(self):
        with pytest.raises(ValueError):
            Pollutant("CO", "PPMV", 2, molecular_weight=28.0)


class TestEvents:
    def test_simple_event_rejects_sentinel(self):
        with pytest.raises(ValueError):
            SimpleEvent(0, GeoPoint(0, 0), "CO", -0.0)

    def test_simple_event_rejects_negative(self):
        with pytest.raises(ValueError):
            SimpleEvent(0, GeoPoint(0, 0), "CO", -1.0)

    def test_simple_event_rejects_nan(self):
        with pytest.raises(ValueError):
            SimpleEvent(0, GeoPoint(0, 0), "CO", float("nan"))

    def test_simple_event_accepts_plain_zero(self):
        ev = SimpleEvent(0, GeoPoint(0, 0), "CO", 0.0)
        assert ev.value == 0.0

    def test_station_observation_rejects_negative(self):
        with pytest.raises(ValueError):
            StationObservation(0, GeoPoint(0, 0), "CO", -1.0, "st01")


class TestPlotRecord:
    def test_needs_twelve_levels(self):
        with pytest.raises(ValueError):
            PlotRecord(0, GeoPoint(0, 0), "CO", (1.0,) * 11)

    def test_levels_ok(self):
        rec = PlotRecord(0, GeoPoint(0, 0), "CO", (-0.0,) * 12)
        assert len(rec.levels) == 12
        assert math.copysign(1.0, rec.levels[0]) < 0
