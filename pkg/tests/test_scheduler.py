import json
import random
from dataclasses import replace

import pytest

from starlab_twin.errors import InstanceTooLarge
from starlab_twin.orbit import orbital_period
from starlab_twin.scenario import ExperimentSpec
from starlab_twin.scheduler import (
    DUTY_FLOOR,
    NOMINAL_SUPPLY,
    PEAK_SUPPLY,
    SLOT_CONFLICT,
    STORAGE_OVERFLOW,
    WINDOW_MISS,
    Schedule,
    ScheduleEntry,
    duty_cycle,
    make_entry,
    plan_exhaustive,
    plan_greedy,
    request_order,
    schedule_from_dict,
    schedule_to_dict,
    validate,
)

from conftest import random_instance, synthetic_window

T550 = orbital_period(550.0)


def _entry(id_, t0, t1, devices, **kw):
    return ScheduleEntry(id=id_, t_start=t0, t_end=t1, devices=frozenset(devices), band="none", **kw)


def _codes(violations):
    return [v.code for v in violations]


# -- validate ---------------------------------------------------------------


def test_overlapping_minerva_a_is_slot_conflict(scenario):
    sched = [_entry("a", 0, 300, {"Minerva-A", "FE1"}), _entry("b", 100, 400, {"Minerva-A", "FE2"})]
    assert _codes(validate(sched, scenario, [])) == [SLOT_CONFLICT]


def test_touching_entries_do_not_conflict(scenario):
    sched = [_entry("a", 0, 300, {"Minerva-A", "FE1"}), _entry("b", 300, 600, {"Minerva-A", "FE2"})]
    assert validate(sched, scenario, []) == []


def test_two_frontends_on_one_sdr_in_one_entry(scenario):
    assert _codes(validate([_entry("a", 0, 300, {"Minerva-A", "FE1", "FE2"})], scenario, [])) == [SLOT_CONFLICT]


def test_duty_floor_met_by_900_s(scenario):
    s = replace(scenario, enforce_duty_floor=True, sim_duration=T550)
    assert 900 / T550 == pytest.approx(0.1568, abs=1e-4)
    assert validate([_entry("a", 0, 900, {"Minerva-B", "FE4"})], s, []) == []


def test_empty_schedule_misses_duty_floor(scenario):
    s = replace(scenario, enforce_duty_floor=True, sim_duration=T550)
    assert _codes(validate([], s, [])) == [DUTY_FLOOR]


def test_duty_floor_off_by_default(scenario):
    assert validate([], scenario, []) == []


def test_peak_supply(scenario):
    sched = [
        _entry("a", 0, 100, {"Minerva-A", "FE1"}, extra_power=10.0),
        _entry("b", 0, 100, {"Minerva-B", "FE4", "optical"}, extra_power=10.0),
    ]
    codes = _codes(validate(sched, scenario, []))
    assert codes == [PEAK_SUPPLY]


def test_exactly_85_w_is_allowed(scenario):
    sched = [_entry("a", 0, 100, {"Minerva-A", "Minerva-B", "optical", "FE1", "FE4"})]
    assert validate(sched, scenario, []) == []


def test_sustained_nominal(scenario):
    short = [_entry("a", 0, 599, {"Minerva-A", "FE1"}, extra_power=20.0)]
    long = [_entry("a", 0, 600, {"Minerva-A", "FE1"}, extra_power=20.0)]
    assert validate(short, scenario, []) == []
    assert _codes(validate(long, scenario, [])) == [NOMINAL_SUPPLY]


def test_sustained_run_spans_back_to_back_entries(scenario):
    sched = [
        _entry("a", 0, 400, {"Minerva-A", "FE1"}, extra_power=20.0),
        _entry("b", 400, 800, {"Minerva-B", "FE4"}, extra_power=20.0),
    ]
    assert _codes(validate(sched, scenario, [])) == [NOMINAL_SUPPLY]


def test_storage_overflow(scenario):
    s = replace(scenario, platform=replace(scenario.platform, data_storage_capacity=1e6))
    sched = [_entry("a", 0, 100, {"Minerva-A", "FE1"}, data_rate=1e6)]
    violations = validate(sched, s, [])
    assert _codes(violations) == [STORAGE_OVERFLOW]
    assert violations[0].t == pytest.approx(8.0)


def test_downlink_outside_pass_is_window_miss(scenario):
    dl = _entry("dl", 0, 100, {"Minerva-A", "FE2"}, kind="downlink", station="Barcelona", downlink_rate=1.152e6)
    assert _codes(validate([dl], scenario, [])) == [WINDOW_MISS]
    w = synthetic_window("Barcelona", 0.0, 600.0)
    dl = replace(dl, band="L/S")
    assert validate([dl], scenario, [w]) == []


def test_violation_times_inside_horizon(scenario):
    s = replace(scenario, sim_duration=1000.0)
    sched = [_entry("a", -50, 1500, {"Minerva-A", "FE1"}, extra_power=80.0)]
    for v in validate(sched, s, []):
        assert 0 <= v.t <= 1000.0


# -- duty_cycle -------------------------------------------------------------


def test_duty_cycle_examples():
    assert duty_cycle([_entry("a", 0, 900, set())], 5739.0, 5739.0)[1] == pytest.approx(0.1568, abs=1e-4)
    assert duty_cycle(Schedule(), 5739.0, 5739.0) == ([0.0], 0.0)
    union = duty_cycle([_entry("a", 0, 600, set()), _entry("b", 300, 900, set())], 5739.0, 5739.0)[1]
    assert union * 5739.0 == pytest.approx(900.0)


def test_duty_cycle_per_orbit_split():
    per_orbit, low = duty_cycle([_entry("a", 900, 1100, set())], 1000.0, 2000.0)
    assert per_orbit == pytest.approx([0.1, 0.1])
    assert low == pytest.approx(0.1)


def test_duty_cycle_needs_positive_period():
    with pytest.raises(ValueError):
        duty_cycle([], 0.0, 100.0)


# -- greedy -----------------------------------------------------------------


def _req(id_, fes, duration=300.0, **kw):
    return ExperimentSpec(id=id_, duration=duration, latest_end=86400.0, required_frontends=frozenset(fes), **kw)


def test_greedy_runs_both_sdrs_concurrently(scenario):
    w = synthetic_window("Barcelona", 1000.0, 1300.0)
    reqs = [_req("A", {"FE4"}, priority=1), _req("B", {"FE1"})]
    sched = plan_greedy(reqs, [w], scenario, insert_downlinks=False)
    assert [(e.id, e.t_start) for e in sched.entries] == [("A", 1000.0), ("B", 1000.0)]
    assert validate(sched, scenario, [w]) == []
    assert sched.skipped == ()


def test_greedy_serialises_exclusive_frontend(scenario):
    w = synthetic_window("Barcelona", 1000.0, 1300.0)
    reqs = [_req("low", {"FE2"}, priority=1), _req("high", {"FE2"}, priority=3)]
    sched = plan_greedy(reqs, [w], scenario, insert_downlinks=False)
    assert [e.id for e in sched.entries] == ["high"]
    assert sched.skipped == (("low", "no-feasible-slot"),)


def test_greedy_empty(scenario, default_passes):
    sched = plan_greedy([], default_passes, scenario)
    assert sched.entries == () and validate(sched, scenario, default_passes) == []


def test_greedy_reports_flatsat_and_no_window(scenario):
    w = synthetic_window("Barcelona", 1000.0, 1300.0)
    reqs = [
        _req("heavy", {"FE1", "FE3"}, requires_optical=True, extra_power=30.0),
        _req("optical-only", set(), requires_optical=True),
    ]
    sched = plan_greedy(reqs, [w], scenario)
    assert dict(sched.skipped) == {"heavy": "flatsat:exceeds-peak-supply", "optical-only": "no-window"}


def test_request_order_is_total():
    reqs = [
        _req("b", {}, priority=1, earliest_start=0.0),
        _req("a", {}, priority=1, earliest_start=0.0),
        _req("c", {}, priority=2, earliest_start=50.0),
        _req("d", {}, priority=1, earliest_start=-1.0),
    ]
    assert [r.id for r in request_order(reqs)] == ["c", "d", "a", "b"]


def test_greedy_inserts_downlinks_that_drain(scenario):
    w = synthetic_window("Barcelona", 2000.0, 2600.0)
    reqs = [_req("collect", {"FE1"}, duration=300.0, data_production_rate=1e6, requires_contact=False)]
    sched = plan_greedy(reqs, [w], scenario)
    assert [e.kind for e in sched.entries] == ["experiment", "downlink"]
    dl = sched.downlinks[0]
    assert dl.band == "Ka" and dl.t_start == 2000.0
    assert dl.duration * dl.downlink_rate >= 3e8
    assert validate(sched, scenario, [w]) == []


@pytest.mark.parametrize("seed", range(40))
def test_greedy_always_validates(scenario, seed):
    reqs, windows = random_instance(random.Random(seed))
    sched = plan_greedy(reqs, windows, scenario)
    assert validate(sched, scenario, windows) == []


def test_greedy_deterministic(scenario):
    reqs, windows = random_instance(random.Random(7), n_requests=4)
    a = plan_greedy(reqs, windows, scenario)
    b = plan_greedy(list(reversed(reqs)), windows, scenario)
    assert a == b


# -- exhaustive -------------------------------------------------------------


@pytest.mark.parametrize("seed", range(25))
def test_exhaustive_dominates_greedy(scenario, seed):
    reqs, windows = random_instance(random.Random(1000 + seed))
    greedy = plan_greedy(reqs, windows, scenario, insert_downlinks=False)
    best = plan_exhaustive(reqs, windows, scenario)
    n_best = 0 if best is None else len(best.entries)
    assert n_best >= len(greedy.entries)
    if best is not None:
        assert validate(best, scenario, windows) == []


def test_exhaustive_single_request_matches_greedy(scenario):
    w = synthetic_window("Barcelona", 500.0, 1100.0)
    reqs = [_req("only", {"FE3"})]
    assert len(plan_exhaustive(reqs, [w], scenario).entries) == len(plan_greedy(reqs, [w], scenario).experiments) == 1


def test_exhaustive_serialises_in_one_window(scenario):
    w = synthetic_window("Barcelona", 0.0, 600.0)
    reqs = [_req("p", {"FE2"}, duration=300.0, priority=5), _req("q", {"FE2"}, duration=300.0)]
    assert len(plan_exhaustive(reqs, [w], scenario).entries) == 2


def test_exhaustive_infeasible(scenario):
    w = synthetic_window("Barcelona", 0.0, 100.0)
    assert plan_exhaustive([_req("long", {"FE2"}, duration=300.0)], [w], scenario) is None


def test_exhaustive_empty(scenario):
    assert plan_exhaustive([], [], scenario) == Schedule()


@pytest.mark.parametrize(
    "n_req, n_win, quantum",
    [(5, 1, 60.0), (1, 4, 60.0), (1, 1, 30.0)],
)
def test_exhaustive_guard(scenario, n_req, n_win, quantum):
    reqs = [_req(f"r{i}", {"FE1"}) for i in range(n_req)]
    windows = [synthetic_window("Barcelona", 1000.0 * i, 1000.0 * i + 300) for i in range(n_win)]
    with pytest.raises(InstanceTooLarge):
        plan_exhaustive(reqs, windows, scenario, quantum=quantum)


# -- properties -------------------------------------------------------------


def _random_entries(rng):
    devices = [
        {"Minerva-A", "FE1"},
        {"Minerva-A", "FE2"},
        {"Minerva-B", "FE3"},
        {"Minerva-B", "FE4"},
        {"optical"},
        set(),
    ]
    out = []
    for i in range(rng.randint(1, 6)):
        t0 = rng.uniform(0, 2000)
        out.append(
            _entry(
                f"e{i}",
                t0,
                t0 + rng.uniform(60, 900),
                rng.choice(devices),
                extra_power=rng.choice([0.0, 10.0, 30.0]),
                data_rate=rng.choice([0.0, 1e6, 5e6]),
            )
        )
    return out


@pytest.mark.parametrize("seed", range(60))
def test_validate_monotone_under_removal(scenario, seed):
    rng = random.Random(seed)
    s = replace(scenario, platform=replace(scenario.platform, data_storage_capacity=5e8))
    entries = _random_entries(rng)
    watched = {SLOT_CONFLICT, PEAK_SUPPLY, STORAGE_OVERFLOW}
    full = set(_codes(validate(entries, s, []))) & watched
    for i in range(len(entries)):
        fewer = entries[:i] + entries[i + 1 :]
        assert set(_codes(validate(fewer, s, []))) & watched <= full


def test_duty_floor_may_fire_after_removal(scenario):
    s = replace(scenario, enforce_duty_floor=True, sim_duration=T550)
    entry = _entry("a", 0, 900, {"Minerva-B", "FE4"})
    assert DUTY_FLOOR not in _codes(validate([entry], s, []))
    assert DUTY_FLOOR in _codes(validate([], s, []))


def test_schedule_json_round_trip(demo):
    from starlab_twin.orbit import all_passes

    passes = all_passes(demo)
    sched = plan_greedy(demo.experiments, passes, demo)
    doc = json.loads(json.dumps(schedule_to_dict(sched)))
    assert schedule_from_dict(doc) == sched


def test_schedule_from_bad_document():
    from starlab_twin.errors import SchemaError

    with pytest.raises(SchemaError):
        schedule_from_dict({"entries": [{"id": "x"}]})
    with pytest.raises(SchemaError):
        schedule_from_dict(
            {"entries": [{"id": "x", "t_start_s": 0, "t_end_s": 1, "devices": [], "band": "none", "kind": "nap"}]}
        )


def test_make_entry_copies_request(scenario):
    r = _req("x", {"FE4"}, requires_optical=True, extra_power=5.0, data_production_rate=2e6, priority=4)
    e = make_entry(r, scenario, 10.0)
    assert e.devices == frozenset({"FE4", "Minerva-B", "optical"})
    assert (e.t_end, e.band, e.extra_power, e.data_rate, e.priority) == (310.0, "Ka+optical", 5.0, 2e6, 4)
