"""Bundled demonstration scenario: one day of mixed payload activity."""

from __future__ import annotations

import math
from dataclasses import replace

from .orbit import orbital_period
from .scenario import ExperimentSpec, Scenario, default_scenario

DAY = 86400.0


def demo_scenario() -> Scenario:
    """Default platform plus a day of requests that meets the duty-cycle floor.

    Each orbit carries a 900 s store-and-forward IoT collection on the UHF
    front-end; contact experiments exercise the S, X, Ka and optical links.
    """
    base = default_scenario()
    period = orbital_period(base.orbit.altitude)
    n_orbits = int(math.floor(DAY / period))
    exps = [
        ExperimentSpec(
            id=f"iot-collect-{k:02d}",
            duration=900.0,
            earliest_start=round(k * period, 3),
            latest_end=round((k + 1) * period, 3) - 1.0,
            priority=1,
            required_frontends=frozenset({"FE1"}),
            extra_power=5.0,
            data_production_rate=20e3,
            requires_contact=False,
        )
        for k in range(n_orbits)
    ]
    exps += [
        ExperimentSpec(
            id="ka-n511-throughput",
            duration=300.0,
            latest_end=DAY,
            priority=5,
            required_frontends=frozenset({"FE4"}),
            extra_power=10.0,
            data_production_rate=1e6,
        ),
        ExperimentSpec(
            id="x-backhaul",
            duration=240.0,
            latest_end=DAY,
            priority=4,
            required_frontends=frozenset({"FE3"}),
            extra_power=5.0,
            data_production_rate=2e6,
        ),
        ExperimentSpec(
            id="optical-link-trial",
            duration=120.0,
            latest_end=DAY,
            priority=3,
            requires_optical=True,
        ),
        ExperimentSpec(
            id="s-ntn-iot",
            duration=300.0,
            latest_end=DAY,
            priority=2,
            required_frontends=frozenset({"FE2"}),
            extra_power=5.0,
            data_production_rate=0.5e6,
        ),
        ExperimentSpec(
            id="dual-band-s-ka",
            duration=200.0,
            latest_end=DAY,
            priority=2,
            required_frontends=frozenset({"FE2", "FE4"}),
            extra_power=5.0,
            data_production_rate=1e6,
        ),
    ]
    return replace(base, experiments=tuple(exps), sim_duration=DAY, enforce_duty_floor=True)
