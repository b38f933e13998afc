import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starlab_twin.orbit import (
    EARTH_RATE,
    R_EARTH,
    elevation_and_range,
    find_passes,
    orbital_period,
    propagate,
    propagate_inertial,
)
from starlab_twin.scenario import GroundStation, OrbitSpec

MU = 398600.4418


def kepler_period(h):
    return 2 * math.pi * math.sqrt((6378.137 + h) ** 3 / MU)


@pytest.mark.parametrize("h, expected", [(550.0, 5739.0), (500.0, 5677.0)])
def test_orbital_period(h, expected):
    assert orbital_period(h) == pytest.approx(expected, abs=2.0)
    assert orbital_period(h) == pytest.approx(kepler_period(h), rel=1e-12)


def test_period_kepler_exponent():
    a1, a2 = R_EARTH + 500.0, R_EARTH + 1200.0
    ratio = orbital_period(1200.0) / orbital_period(500.0)
    assert ratio == pytest.approx((a2 / a1) ** 1.5, rel=1e-12)


@pytest.mark.parametrize("h", [0.0, -10.0])
def test_period_domain_error(h):
    with pytest.raises(ValueError):
        orbital_period(h)


def test_epoch_anchor():
    o = OrbitSpec(altitude=550.0, inclination=0.0, raan=0.0, initial_true_anomaly=0.0)
    pos = propagate(o, 0.0)
    assert pos == pytest.approx([6928.137, 0.0, 0.0], abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(200, 2000),
    st.floats(0, 180),
    st.floats(0, 359.99),
    st.floats(0, 359.99),
    st.floats(0, 1e6),
)
def test_norm_constant(h, inc, raan, nu, t):
    o = OrbitSpec(h, inc, raan, nu)
    r = np.linalg.norm(propagate(o, t))
    assert abs(r - (R_EARTH + h)) / (R_EARTH + h) < 1e-6


def test_one_period_returns_to_same_plane_angle():
    o = OrbitSpec(550.0, 97.6, 30.0, 15.0)
    T = orbital_period(550.0)
    assert propagate_inertial(o, T) == pytest.approx(propagate_inertial(o, 0.0), abs=1e-6)
    # Earth-fixed: same inertial point seen after the Earth turned by EARTH_RATE*T
    theta = EARTH_RATE * T
    x0, y0, z0 = propagate(o, 0.0)
    rot = np.array([x0 * math.cos(theta) + y0 * math.sin(theta), -x0 * math.sin(theta) + y0 * math.cos(theta), z0])
    assert propagate(o, T) == pytest.approx(rot, abs=1e-6)


def test_zenith_geometry():
    st_ = GroundStation("g", 0.0, 0.0)
    el, rng = elevation_and_range([R_EARTH + 550.0, 0.0, 0.0], st_)
    assert el == pytest.approx(90.0)
    assert rng == pytest.approx(550.0)


def _point_at_elevation(el_deg, h=550.0):
    """Satellite position in the x-z plane seen from a station at (0, 0) at ``el_deg``."""
    r = R_EARTH + h
    el = math.radians(el_deg)
    # central angle from the law of sines
    lam = math.pi / 2 - el - math.asin(R_EARTH * math.cos(el) / r)
    return [r * math.cos(lam), 0.0, r * math.sin(lam)]


def test_horizon_slant_range():
    el, rng = elevation_and_range(_point_at_elevation(0.0), GroundStation("g", 0.0, 0.0))
    assert el == pytest.approx(0.0, abs=1e-9)
    assert rng == pytest.approx(math.sqrt(550.0**2 + 2 * R_EARTH * 550.0), abs=1e-6)
    assert rng == pytest.approx(2705.0, abs=1.0)


def test_minimum_optical_elevation():
    h, d = 550.0, 1500.0
    r = R_EARTH + h
    oracle_el = math.degrees(math.asin((r * r - R_EARTH**2 - d * d) / (2 * R_EARTH * d)))
    assert oracle_el == pytest.approx(15.4, abs=0.1)
    el, rng = elevation_and_range(_point_at_elevation(oracle_el), GroundStation("g", 0.0, 0.0))
    assert rng == pytest.approx(1500.0, abs=1e-6)
    assert el == pytest.approx(15.4, abs=0.1)


@settings(max_examples=50, deadline=None)
@given(st.floats(-89, 89), st.floats(-180, 180), st.floats(0, 2 * math.pi))
def test_elevation_rotation_symmetry(lat, lon, angle):
    station = GroundStation("g", lat, lon)
    sat = np.array([4000.0, -3000.0, 4500.0])
    el1, r1 = elevation_and_range(sat, station)
    c, s = math.cos(angle), math.sin(angle)
    rot_sat = np.array([c * sat[0] - s * sat[1], s * sat[0] + c * sat[1], sat[2]])
    rotated = replace(station, longitude=lon + math.degrees(angle))
    el2, r2 = elevation_and_range(rot_sat, rotated)
    assert abs(r2 - r1) <= 1e-9 * r1
    assert abs(el2 - el1) <= 1e-9 * max(1.0, abs(el1))


def test_pass_contains_epoch_at_subsatellite_point():
    o = OrbitSpec(550.0, 97.6, 0.0, 0.0)
    x, y, z = propagate(o, 0.0)
    station = GroundStation(
        "sub", math.degrees(math.asin(z / math.sqrt(x * x + y * y + z * z))), math.degrees(math.atan2(y, x))
    )
    passes = find_passes(o, station, 0.0, 3600.0, 10.0)
    assert passes and passes[0].t_start <= 0.0 <= passes[0].t_end
    assert passes[0].max_elevation == pytest.approx(90.0, abs=1e-6)


def test_passes_sorted_disjoint_and_dense_resampled(scenario, default_passes):
    for station in scenario.stations:
        windows = [w for w in default_passes if w.station == station.name]
        assert windows
        for a, b in zip(windows, windows[1:]):
            assert a.t_end < b.t_start
        for w in windows:
            assert w.t_start < w.t_end
            assert all(s.elevation >= station.min_elevation for s in w.samples)
            assert w.max_elevation == max(s.elevation for s in w.samples)
            dense = np.arange(w.t_start, w.t_end, 1.0)
            el, _ = elevation_and_range(propagate(scenario.orbit, dense), station)
            assert el.min() >= station.min_elevation - 1e-9


def test_edges_within_tenth_of_a_second(scenario, default_passes):
    for w in default_passes:
        station = scenario.station(w.station)
        for edge, outward in ((w.t_start, -0.1), (w.t_end, 0.1)):
            if 0.0 < edge < scenario.sim_duration:
                el, _ = elevation_and_range(propagate(scenario.orbit, edge + outward), station)
                assert el < station.min_elevation


def test_slant_range_bounds_at_zero_mask(scenario, default_passes):
    h = scenario.orbit.altitude
    hi = math.sqrt(h * h + 2 * R_EARTH * h)
    rf = scenario.stations[0]
    assert rf.min_elevation == 0.0
    for w in default_passes:
        if w.station == rf.name:
            for s in w.samples:
                assert h - 1e-6 <= s.slant_range <= hi + 1e-6


def test_halving_step_loses_no_window(scenario):
    for station in scenario.stations:
        coarse = find_passes(scenario.orbit, station, 0.0, 86400.0, 10.0)
        fine = find_passes(scenario.orbit, station, 0.0, 86400.0, 5.0)
        for w in coarse:
            match = [f for f in fine if f.t_start <= w.t_end and w.t_start <= f.t_end]
            assert len(match) == 1
            assert abs(match[0].t_start - w.t_start) <= 0.2
            assert abs(match[0].t_end - w.t_end) <= 0.2


def test_empty_interval_yields_no_passes(scenario):
    assert find_passes(scenario.orbit, scenario.stations[0], 10.0, 10.0, 10.0) == []
