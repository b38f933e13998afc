from __future__ import annotations

import random

import pytest

from starlab_twin.demo import demo_scenario
from starlab_twin.orbit import GeoSample, PassWindow, all_passes
from starlab_twin.scenario import ExperimentSpec, default_scenario


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def demo():
    return demo_scenario()


@pytest.fixture(scope="session")
def default_passes(scenario):
    return all_passes(scenario)


def synthetic_window(station: str, t0: float, t1: float, slant_km: float = 1000.0, step: float = 10.0):
    """A pass with constant geometry; every band closes at 1000 km."""
    times = [t0]
    t = t0 + step
    while t < t1:
        times.append(t)
        t += step
    times.append(t1)
    samples = tuple(GeoSample(x, (0.0, 0.0, 0.0), 45.0, slant_km) for x in times)
    return PassWindow(station, t0, t1, 45.0, samples)


def random_instance(rng: random.Random, n_requests: int | None = None, horizon: float = 3000.0):
    """Small scheduling instance: <= 4 requests, <= 3 synthetic windows."""
    n_windows = rng.randint(1, 3)
    windows = []
    cursor = rng.uniform(0, 200)
    for _ in range(n_windows):
        length = rng.choice([300.0, 420.0, 600.0, 900.0])
        station = rng.choice(["Barcelona", "Barcelona", "Montsec"])
        if cursor + length > horizon:
            break
        windows.append(synthetic_window(station, cursor, cursor + length))
        cursor += length + rng.uniform(60, 600)
    n = rng.randint(1, 4) if n_requests is None else n_requests
    reqs = []
    for i in range(n):
        fes = rng.sample(["FE1", "FE2", "FE3", "FE4"], rng.choice([0, 1, 1, 1, 2]))
        optical = rng.random() < 0.2 or not fes
        lo = rng.choice([0.0, rng.uniform(0, horizon / 2)])
        reqs.append(
            ExperimentSpec(
                id=f"r{i}",
                duration=rng.choice([60.0, 120.0, 150.0, 240.0, 300.0]),
                earliest_start=lo,
                latest_end=horizon,
                priority=rng.randint(0, 5),
                required_frontends=frozenset(fes),
                requires_optical=optical,
                extra_power=rng.choice([0.0, 5.0, 10.0, 20.0, 30.0]),
                data_production_rate=rng.choice([0.0, 1e5, 1e6]),
                requires_contact=rng.random() < 0.8,
            )
        )
    return reqs, windows
