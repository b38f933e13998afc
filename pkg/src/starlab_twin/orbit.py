"""Circular Keplerian orbit over a rotating spherical Earth, and pass finding.

Fidelity limits: spherical Earth, circular orbit, no J2, drag, or
refraction. Earth-fixed and inertial frames coincide at t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import GroundStation, OrbitSpec

MU_EARTH = 398600.4418  # km^3/s^2
R_EARTH = 6378.137  # km
SIDEREAL_DAY = 86164.0905  # s
EARTH_RATE = 2.0 * math.pi / SIDEREAL_DAY  # rad/s

EDGE_TOLERANCE = 0.1  # s, bisection target for pass boundaries


@dataclass(frozen=True)
class GeoSample:
    t: float
    sat_position: tuple[float, float, float]  # Earth-fixed, km
    elevation: float  # deg
    slant_range: float  # km


@dataclass(frozen=True)
class PassWindow:
    station: str
    t_start: float
    t_end: float
    max_elevation: float
    samples: tuple[GeoSample, ...]

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def min_slant_range(self) -> float:
        return min(s.slant_range for s in self.samples)


def orbital_period(altitude: float) -> float:
    """Two-body period in seconds of a circular orbit ``altitude`` km up."""
    if not altitude > 0:
        raise ValueError(f"altitude must be > 0 km, got {altitude}")
    a = R_EARTH + altitude
    return 2.0 * math.pi * math.sqrt(a**3 / MU_EARTH)


def _argument_of_latitude(orbit: OrbitSpec, t):
    period = orbital_period(orbit.altitude)
    return math.radians(orbit.initial_true_anomaly) + 2.0 * math.pi * (
        np.asarray(t, dtype=float) - orbit.epoch
    ) / period


def propagate_inertial(orbit: OrbitSpec, t) -> np.ndarray:
    """Inertial position (km) at time(s) ``t``; shape (3,) or (N, 3)."""
    u = _argument_of_latitude(orbit, t)
    r = R_EARTH + orbit.altitude
    inc = math.radians(orbit.inclination)
    raan = math.radians(orbit.raan)
    cu, su = np.cos(u), np.sin(u)
    x = r * (math.cos(raan) * cu - math.sin(raan) * su * math.cos(inc))
    y = r * (math.sin(raan) * cu + math.cos(raan) * su * math.cos(inc))
    z = r * su * math.sin(inc)
    return np.stack([x, y, z], axis=-1)


def propagate(orbit: OrbitSpec, t) -> np.ndarray:
    """Earth-fixed position (km) at time(s) ``t`` seconds after simulation zero."""
    eci = propagate_inertial(orbit, t)
    theta = EARTH_RATE * np.asarray(t, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    x = c * eci[..., 0] + s * eci[..., 1]
    y = -s * eci[..., 0] + c * eci[..., 1]
    return np.stack([x, y, eci[..., 2]], axis=-1)


def station_position(station: GroundStation) -> np.ndarray:
    r = R_EARTH + station.altitude / 1000.0
    lat = math.radians(station.latitude)
    lon = math.radians(station.longitude)
    return np.array(
        [r * math.cos(lat) * math.cos(lon), r * math.cos(lat) * math.sin(lon), r * math.sin(lat)]
    )


def elevation_and_range(sat_position, station: GroundStation):
    """Elevation (deg) above the local horizontal and slant range (km).

    Accepts a single position (3,) or a stack (N, 3); returns scalars or
    arrays accordingly.
    """
    sat = np.asarray(sat_position, dtype=float)
    site = station_position(station)
    rho = sat - site
    rng = np.linalg.norm(rho, axis=-1)
    up = site / np.linalg.norm(site)
    sin_el = np.clip((rho @ up) / rng, -1.0, 1.0)
    el = np.degrees(np.arcsin(sin_el))
    if el.ndim == 0:
        return float(el), float(rng)
    return el, rng


def _elevation_at(orbit: OrbitSpec, station: GroundStation, t: float) -> float:
    return elevation_and_range(propagate(orbit, t), station)[0]


def _bisect_edge(orbit, station, t_out: float, t_in: float) -> float:
    """Shrink [t_out, t_in] around the horizon crossing; return the inside end."""
    while abs(t_in - t_out) > EDGE_TOLERANCE:
        mid = 0.5 * (t_in + t_out)
        if _elevation_at(orbit, station, mid) >= station.min_elevation:
            t_in = mid
        else:
            t_out = mid
    return float(t_in)


def _sample(orbit, station, times) -> tuple[GeoSample, ...]:
    pos = propagate(orbit, np.asarray(times, dtype=float))
    el, rng = elevation_and_range(pos, station)
    return tuple(
        GeoSample(float(t), (float(p[0]), float(p[1]), float(p[2])), float(e), float(r))
        for t, p, e, r in zip(times, pos, el, rng)
    )


def find_passes(
    orbit: OrbitSpec, station: GroundStation, t0: float, t1: float, step: float
) -> list[PassWindow]:
    """Maximal visibility intervals in [t0, t1], sorted and disjoint.

    The grid is sampled every ``step`` seconds; each rising and setting
    edge is refined by bisection to within 0.1 s, keeping the visible side
    so every retained sample satisfies the elevation mask.
    """
    if not t0 < t1 or not step > 0:
        return []
    n = int(math.floor((t1 - t0) / step))
    grid = t0 + step * np.arange(n + 1)
    if grid[-1] < t1:
        grid = np.append(grid, t1)
    el, _ = elevation_and_range(propagate(orbit, grid), station)
    visible = el >= station.min_elevation

    windows: list[PassWindow] = []
    i = 0
    while i < len(grid):
        if not visible[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(grid) and visible[j + 1]:
            j += 1
        start = float(grid[i]) if i == 0 else _bisect_edge(orbit, station, grid[i - 1], grid[i])
        end = (
            float(grid[j])
            if j == len(grid) - 1
            else _bisect_edge(orbit, station, grid[j + 1], grid[j])
        )
        if end > start:
            interior = [float(t) for t in grid[i : j + 1] if start < t < end]
            samples = _sample(orbit, station, [start, *interior, end])
            windows.append(
                PassWindow(
                    station=station.name,
                    t_start=start,
                    t_end=end,
                    max_elevation=max(s.elevation for s in samples),
                    samples=samples,
                )
            )
        i = j + 1
    return windows


def all_passes(scenario, t0: float = 0.0, t1: float | None = None, step: float | None = None):
    """Passes over every station of a scenario, merged and sorted by start time."""
    t1 = scenario.sim_duration if t1 is None else t1
    step = scenario.time_step if step is None else step
    out = []
    for st in scenario.stations:
        out.extend(find_passes(scenario.orbit, st, t0, t1, step))
    out.sort(key=lambda w: (w.t_start, w.station))
    return out
