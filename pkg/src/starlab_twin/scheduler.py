"""Experiment and downlink planning against pass windows and payload limits.

``validate`` is the single source of truth for what a legal schedule is;
both planners search for placements that ``validate`` accepts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .links import band_assessor, closed_intervals
from .orbit import PassWindow
from .payload import devices_load, experiment_devices, flatsat_check
from .scenario import OPTICAL, ExperimentSpec, Scenario
from .errors import InstanceTooLarge

SLOT_CONFLICT = "slot-conflict"
PEAK_SUPPLY = "peak-supply"
NOMINAL_SUPPLY = "nominal-supply"
DUTY_FLOOR = "duty-floor"
STORAGE_OVERFLOW = "storage-overflow"
WINDOW_MISS = "window-miss"

SUSTAINED_WINDOW = 600.0  # s of continuous load above nominal that counts as sustained
EPS = 1e-6  # s, containment slack for float boundaries

EXPERIMENT = "experiment"
DOWNLINK = "downlink"


@dataclass(frozen=True)
class ScheduleEntry:
    """One timed use of payload devices.

    Entries are self-contained: power and data rates are copied from the
    request so a schedule file can be validated without the request list.
    """

    id: str
    t_start: float
    t_end: float
    devices: frozenset[str]
    band: str
    kind: str = EXPERIMENT
    station: str | None = None
    extra_power: float = 0.0
    data_rate: float = 0.0  # bit/s produced into the store
    downlink_rate: float = 0.0  # bit/s drained from the store
    priority: int = 0
    requires_contact: bool = False

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def _entry_key(e: ScheduleEntry):
    return (e.t_start, e.t_end, e.id)


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduleEntry, ...] = ()
    skipped: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=_entry_key)))
        object.__setattr__(self, "skipped", tuple(self.skipped))

    @property
    def experiments(self) -> list[ScheduleEntry]:
        return [e for e in self.entries if e.kind == EXPERIMENT]

    @property
    def downlinks(self) -> list[ScheduleEntry]:
        return [e for e in self.entries if e.kind == DOWNLINK]


@dataclass(frozen=True)
class Violation:
    code: str
    t: float
    detail: str


# ---------------------------------------------------------------------------
# Helpers shared by validation and planning


class LinkCache:
    """Memoised closed-link intervals per (pass, band)."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._assessors: dict[str, object] = {}
        self._closed: dict[tuple, list[tuple[float, float]]] = {}

    def closed(self, window: PassWindow, band: str) -> list[tuple[float, float]]:
        key = (window.station, window.t_start, window.t_end, band)
        if key not in self._closed:
            if band not in self._assessors:
                self._assessors[band] = band_assessor(self.scenario, band)
            self._closed[key] = closed_intervals(window, self._assessors[band])
        return self._closed[key]

    def common_closed(self, window: PassWindow, bands: Iterable[str]) -> list[tuple[float, float]]:
        """Intervals where every band in ``bands`` is closed (whole window if none)."""
        ivs = [(window.t_start, window.t_end)]
        for band in sorted(set(bands)):
            ivs = _intersect(ivs, self.closed(window, band))
        return ivs


def _intersect(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi > lo:
                out.append((lo, hi))
    return sorted(out)


def _shared_resources(scenario: Scenario) -> set[str]:
    return {sdr.id for sdr in scenario.sdrs} | {OPTICAL}


def entry_bands(entry: ScheduleEntry, s: Scenario) -> set[str]:
    if entry.kind == DOWNLINK:
        return {entry.band}
    bands = {fe.band for fe in s.frontends if fe.id in entry.devices}
    if OPTICAL in entry.devices:
        bands.add(OPTICAL)
    return bands


def _segments(entries: Sequence[ScheduleEntry]):
    """Elementary intervals between entry boundaries with the entries covering each."""
    cuts = sorted({t for e in entries for t in (e.t_start, e.t_end)})
    out = []
    for a, b in zip(cuts, cuts[1:]):
        active = [e for e in entries if e.t_start <= a and e.t_end >= b]
        out.append((a, b, active))
    return out


def union_load(active: Iterable[ScheduleEntry], s: Scenario) -> float:
    active = list(active)
    devices = set().union(*(e.devices for e in active)) if active else set()
    return devices_load(devices, s) + sum(e.extra_power for e in active)


def storage_walk(entries: Sequence[ScheduleEntry], capacity_bits: float, until: float | None = None):
    """Fluid store level under the entries' production and drain rates.

    Returns ``(level_bits, overflow_times)``; the level is evaluated at
    ``until`` (or after the last entry).
    """
    level = 0.0
    overflows: list[float] = []
    full = False
    for a, b, active in _segments(entries):
        if until is not None and a >= until:
            break
        end = b if until is None else min(b, until)
        prod = sum(e.data_rate for e in active if e.kind == EXPERIMENT)
        drain = sum(e.downlink_rate for e in active if e.kind == DOWNLINK)
        net = prod - drain
        new = level + net * (end - a)
        if net > 0 and new > capacity_bits:
            if not full:
                overflows.append(a + max(0.0, capacity_bits - level) / net)
            full = True
            new = capacity_bits
        else:
            full = full and net >= 0
        level = max(new, 0.0)
    return level, overflows


def duty_cycle(sched: Schedule | Sequence[ScheduleEntry], T: float, horizon: float):
    """Per-orbit fraction of ``T`` covered by the union of entries, and its minimum.

    Orbits are the consecutive windows [kT, (k+1)T) lying inside the
    horizon; a horizon shorter than one orbit is scored as one orbit.
    """
    if not T > 0:
        raise ValueError("orbital period must be > 0")
    entries = sched.entries if isinstance(sched, Schedule) else sched
    n = max(1, int(math.floor(horizon / T + 1e-9)))
    merged: list[list[float]] = []
    for lo, hi in sorted((e.t_start, e.t_end) for e in entries):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    per_orbit = []
    for k in range(n):
        w0, w1 = k * T, (k + 1) * T
        covered = sum(max(0.0, min(hi, w1) - max(lo, w0)) for lo, hi in merged)
        per_orbit.append(covered / T)
    return per_orbit, min(per_orbit)


# ---------------------------------------------------------------------------
# Validation


def _clamp_t(t: float, s: Scenario) -> float:
    return min(max(t, 0.0), s.sim_duration)


def _inside(entry: ScheduleEntry, ivs) -> bool:
    return any(lo - EPS <= entry.t_start and entry.t_end <= hi + EPS for lo, hi in ivs)


def validate(
    sched: Schedule | Sequence[ScheduleEntry],
    s: Scenario,
    passes: Sequence[PassWindow],
    *,
    include_duty: bool = True,
    cache: LinkCache | None = None,
) -> list[Violation]:
    """Every constraint violation of a schedule, sorted by time then code.

    The duty-cycle floor is checked only when the scenario enforces it
    (and ``include_duty`` is set).
    """
    from .orbit import orbital_period

    entries = list(sched.entries if isinstance(sched, Schedule) else sched)
    cache = cache or LinkCache(s)
    out: list[Violation] = []
    shared = _shared_resources(s)

    # device exclusivity
    for e in entries:
        per_sdr: dict[str, list[str]] = {}
        for fe in s.frontends:
            if fe.id in e.devices:
                sdr = s.sdr_for(fe.id)
                if sdr is None or sdr.id not in e.devices:
                    out.append(Violation(SLOT_CONFLICT, _clamp_t(e.t_start, s), f"{e.id}: {fe.id} without its SDR"))
                    continue
                per_sdr.setdefault(sdr.id, []).append(fe.id)
        for sdr_id, fes in sorted(per_sdr.items()):
            if len(fes) > 1:
                out.append(
                    Violation(SLOT_CONFLICT, _clamp_t(e.t_start, s), f"{e.id}: {'+'.join(fes)} on {sdr_id}")
                )
    for i, a in enumerate(entries):
        for b in entries[i + 1 :]:
            if a.t_start < b.t_end and b.t_start < a.t_end:
                common = a.devices & b.devices & shared
                if common:
                    out.append(
                        Violation(
                            SLOT_CONFLICT,
                            _clamp_t(max(a.t_start, b.t_start), s),
                            f"{a.id} and {b.id} both use {','.join(sorted(common))}",
                        )
                    )

    # power: instantaneous peak and sustained nominal
    p = s.platform
    peak_open = False
    run_start = None
    run_end = None
    flagged_runs = []
    for a, b, active in _segments(entries):
        load = union_load(active, s) if active else 0.0
        if load > p.supply_peak:
            if not peak_open:
                out.append(Violation(PEAK_SUPPLY, _clamp_t(a, s), f"{load:g} W > {p.supply_peak:g} W"))
            peak_open = True
        else:
            peak_open = False
        if load > p.supply_nominal:
            if run_start is None or a > run_end:
                run_start = a
            run_end = b
            if run_end - run_start >= SUSTAINED_WINDOW - EPS and run_start not in flagged_runs:
                flagged_runs.append(run_start)
                out.append(
                    Violation(
                        NOMINAL_SUPPLY,
                        _clamp_t(run_start, s),
                        f"load above {p.supply_nominal:g} W for >= {SUSTAINED_WINDOW:g} s",
                    )
                )
        else:
            run_start = None

    # storage
    _, overflows = storage_walk(entries, p.data_storage_capacity * 8.0)
    for t in overflows:
        out.append(Violation(STORAGE_OVERFLOW, _clamp_t(t, s), "store exceeds capacity"))

    # windows
    experiments = {x.id: x for x in s.experiments}
    for e in entries:
        if e.t_start < -EPS or e.t_end > s.sim_duration + EPS or not e.t_end > e.t_start:
            out.append(Violation(WINDOW_MISS, _clamp_t(e.t_start, s), f"{e.id} outside the horizon"))
            continue
        if e.kind == EXPERIMENT:
            spec = experiments.get(e.id)
            if spec is not None and (
                e.t_start < spec.earliest_start - EPS or e.t_end > spec.latest_end + EPS
            ):
                out.append(Violation(WINDOW_MISS, e.t_start, f"{e.id} outside its request window"))
                continue
            if not e.requires_contact:
                continue
            bands = entry_bands(e, s)
            ok = any(
                bands <= s.station(w.station).supported_bands
                and _inside(e, cache.common_closed(w, bands))
                for w in passes
                if e.station is None or w.station == e.station
            )
            if not ok:
                out.append(Violation(WINDOW_MISS, e.t_start, f"{e.id} is not inside a closed-link contact"))
        else:
            ok = any(
                w.station == e.station
                and e.band in s.station(w.station).supported_bands
                and _inside(e, cache.closed(w, e.band))
                for w in passes
            )
            if not ok:
                out.append(Violation(WINDOW_MISS, e.t_start, f"{e.id} is not inside a closed-link pass"))

    if include_duty and s.enforce_duty_floor:
        T = orbital_period(s.orbit.altitude)
        per_orbit, _ = duty_cycle(entries, T, s.sim_duration)
        for k, frac in enumerate(per_orbit):
            if frac < p.duty_cycle_floor:
                out.append(
                    Violation(
                        DUTY_FLOOR,
                        _clamp_t(k * T, s),
                        f"orbit {k}: duty {frac:.4f} < {p.duty_cycle_floor:g}",
                    )
                )

    out.sort(key=lambda v: (v.t, v.code, v.detail))
    return out


# ---------------------------------------------------------------------------
# Planning


def request_order(requests: Iterable[ExperimentSpec]) -> list[ExperimentSpec]:
    """Total order: priority descending, then earliest start, then id."""
    return sorted(requests, key=lambda r: (-r.priority, r.earliest_start, r.id))


def make_entry(req: ExperimentSpec, s: Scenario, t_start: float) -> ScheduleEntry:
    devices = frozenset(experiment_devices(req, s))
    bands = sorted({fe.band for fe in s.frontends if fe.id in devices})
    if req.requires_optical:
        bands.append(OPTICAL)
    return ScheduleEntry(
        id=req.id,
        t_start=t_start,
        t_end=t_start + req.duration,
        devices=devices,
        band="+".join(bands) if bands else "none",
        extra_power=req.extra_power,
        data_rate=req.data_production_rate,
        priority=req.priority,
        requires_contact=req.requires_contact,
    )


def placement_intervals(
    req: ExperimentSpec, passes: Sequence[PassWindow], s: Scenario, cache: LinkCache
) -> list[tuple[float, float]]:
    """Intervals that could host the request, ignoring other entries."""
    lo0 = max(req.earliest_start, 0.0)
    hi0 = min(req.latest_end, s.sim_duration)
    if not req.requires_contact:
        return [(lo0, hi0)] if hi0 - lo0 >= req.duration else []
    bands = {fe.band for fe in s.frontends if fe.id in req.required_frontends}
    if req.requires_optical:
        bands.add(OPTICAL)
    out = []
    for w in passes:
        if not bands <= s.station(w.station).supported_bands:
            continue
        for a, b in cache.common_closed(w, bands):
            a, b = max(a, lo0), min(b, hi0)
            if b - a >= req.duration:
                out.append((a, b))
    return sorted(set(out))


def _candidate_starts(lo: float, hi: float, d: float, placed: Sequence[ScheduleEntry], extra=()):
    pts = {lo, hi - d, *extra}
    for e in placed:
        pts.update((e.t_end, e.t_start - d))
    return sorted(t for t in pts if lo <= t <= hi - d)


def _feasible(entries, s, passes, cache) -> bool:
    return not validate(entries, s, passes, include_duty=False, cache=cache)


def plan_greedy(
    requests: Sequence[ExperimentSpec],
    passes: Sequence[PassWindow],
    s: Scenario,
    *,
    insert_downlinks: bool = True,
) -> Schedule:
    """Place each request at its earliest feasible start, in priority order.

    Candidate starts are the placement-interval edges and the boundaries of
    entries already placed. Requests that cannot be placed are listed in
    ``Schedule.skipped`` with a reason. Downlink sessions are then added
    greedily into closed-link passes while the store holds data.
    """
    cache = LinkCache(s)
    placed: list[ScheduleEntry] = []
    skipped: list[tuple[str, str]] = []
    for req in request_order(requests):
        findings = flatsat_check(req, s)
        if findings:
            skipped.append((req.id, "flatsat:" + ",".join(sorted({f.code for f in findings}))))
            continue
        intervals = placement_intervals(req, passes, s, cache)
        if not intervals:
            skipped.append((req.id, "no-window"))
            continue
        chosen = None
        for lo, hi in intervals:
            for t in _candidate_starts(lo, hi, req.duration, placed):
                entry = make_entry(req, s, t)
                if req.requires_contact:
                    entry = _with_station(entry, passes, s, cache)
                if _feasible(placed + [entry], s, passes, cache):
                    chosen = entry
                    break
            if chosen is not None:
                break
        if chosen is None:
            skipped.append((req.id, "no-feasible-slot"))
        else:
            placed.append(chosen)
    if insert_downlinks:
        placed = insert_downlink_sessions(placed, passes, s, cache)
    return Schedule(tuple(placed), tuple(skipped))


def _with_station(entry: ScheduleEntry, passes, s, cache) -> ScheduleEntry:
    bands = entry_bands(entry, s)
    for w in passes:
        if bands <= s.station(w.station).supported_bands and _inside(entry, cache.common_closed(w, bands)):
            return _replace(entry, station=w.station)
    return entry


def _replace(entry: ScheduleEntry, **kw) -> ScheduleEntry:
    from dataclasses import replace

    return replace(entry, **kw)


def downlink_bands(s: Scenario, station) -> list[tuple[str, float, frozenset[str]]]:
    """(band, rate, devices) options at a station, fastest first."""
    opts = []
    if OPTICAL in station.supported_bands:
        opts.append((OPTICAL, s.optical.downlink_max_rate, frozenset({OPTICAL})))
    for fe in s.frontends:
        sdr = s.sdr_for(fe.id)
        if fe.band in station.supported_bands and fe.max_gross_rate and sdr is not None and fe.band in s.links:
            opts.append((fe.band, fe.max_gross_rate, frozenset({fe.id, sdr.id})))
    opts.sort(key=lambda o: (-o[1], o[0]))
    return opts


def insert_downlink_sessions(
    entries: Sequence[ScheduleEntry], passes: Sequence[PassWindow], s: Scenario, cache: LinkCache | None = None
) -> list[ScheduleEntry]:
    cache = cache or LinkCache(s)
    placed = list(entries)
    cap_bits = s.platform.data_storage_capacity * 8.0
    count = 0
    for w in sorted(passes, key=lambda w: (w.t_start, w.station)):
        station = s.station(w.station)
        for band, rate, devices in downlink_bands(s, station):
            if storage_walk(placed, cap_bits, until=w.t_end)[0] <= 0:
                break
            for a, b in cache.closed(w, band):
                inserted = False
                for t in _candidate_starts(a, b, 0.0, placed):
                    pending, _ = storage_walk(placed, cap_bits, until=t)
                    if pending <= 0:
                        continue
                    dur = min(b - t, math.ceil(pending / rate))
                    if dur < 1.0:
                        continue
                    entry = ScheduleEntry(
                        id=f"downlink-{count:03d}",
                        t_start=t,
                        t_end=t + dur,
                        devices=devices,
                        band=band,
                        kind=DOWNLINK,
                        station=w.station,
                        downlink_rate=rate,
                    )
                    if _feasible(placed + [entry], s, passes, cache):
                        placed.append(entry)
                        count += 1
                        inserted = True
                        break
                if inserted:
                    break
    return placed


MAX_EXHAUSTIVE_REQUESTS = 4
MAX_EXHAUSTIVE_WINDOWS = 3
MIN_QUANTUM = 60.0


def plan_exhaustive(
    requests: Sequence[ExperimentSpec],
    passes: Sequence[PassWindow],
    s: Scenario,
    quantum: float = MIN_QUANTUM,
) -> Schedule | None:
    """Branch-and-bound search over placements; test oracle for small instances.

    Starts are drawn from a ``quantum`` grid anchored at each placement
    interval, plus the same boundary-derived points the greedy planner
    uses. Maximises placed count, then total priority. Returns ``None``
    (infeasible) when not even one request can be placed.
    """
    if len(requests) > MAX_EXHAUSTIVE_REQUESTS or len(passes) > MAX_EXHAUSTIVE_WINDOWS:
        raise InstanceTooLarge(
            f"at most {MAX_EXHAUSTIVE_REQUESTS} requests and {MAX_EXHAUSTIVE_WINDOWS} windows"
        )
    if quantum < MIN_QUANTUM:
        raise InstanceTooLarge(f"quantum must be >= {MIN_QUANTUM:g} s")
    if not requests:
        return Schedule()

    cache = LinkCache(s)
    order = request_order(requests)
    options = []
    for req in order:
        if flatsat_check(req, s):
            options.append([])
            continue
        options.append(placement_intervals(req, passes, s, cache))
    suffix_prio = [0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        suffix_prio[i] = suffix_prio[i + 1] + order[i].priority

    best: dict = {"key": None, "entries": None}

    def consider(placed):
        key = (len(placed), sum(e.priority for e in placed))
        if best["key"] is None or key > best["key"]:
            best["key"] = key
            best["entries"] = list(placed)

    def search(i: int, placed: list[ScheduleEntry]):
        if best["key"] is not None:
            remaining = len(order) - i
            bound = (len(placed) + remaining, sum(e.priority for e in placed) + suffix_prio[i])
            if bound <= best["key"]:
                return
        if i == len(order):
            consider(placed)
            return
        req = order[i]
        for lo, hi in options[i]:
            grid = [lo + k * quantum for k in range(int((hi - req.duration - lo) // quantum) + 1)]
            for t in _candidate_starts(lo, hi, req.duration, placed, grid):
                entry = make_entry(req, s, t)
                if req.requires_contact:
                    entry = _with_station(entry, passes, s, cache)
                if _feasible(placed + [entry], s, passes, cache):
                    search(i + 1, placed + [entry])
        search(i + 1, placed)

    search(0, [])
    if not best["entries"]:
        return None
    placed_ids = {e.id for e in best["entries"]}
    skipped = tuple((r.id, "not-placed") for r in order if r.id not in placed_ids)
    return Schedule(tuple(best["entries"]), skipped)


# ---------------------------------------------------------------------------
# JSON


def schedule_to_dict(sched: Schedule) -> dict:
    return {
        "entries": [
            {
                "id": e.id,
                "kind": e.kind,
                "t_start_s": e.t_start,
                "t_end_s": e.t_end,
                "devices": sorted(e.devices),
                "band": e.band,
                "station": e.station,
                "extra_power_w": e.extra_power,
                "data_rate_bps": e.data_rate,
                "downlink_rate_bps": e.downlink_rate,
                "priority": e.priority,
                "requires_contact": e.requires_contact,
            }
            for e in sched.entries
        ],
        "skipped": [{"id": i, "reason": r} for i, r in sched.skipped],
    }


def schedule_from_dict(doc: dict) -> Schedule:
    from .errors import SchemaError

    try:
        entries = tuple(
            ScheduleEntry(
                id=str(d["id"]),
                t_start=float(d["t_start_s"]),
                t_end=float(d["t_end_s"]),
                devices=frozenset(d["devices"]),
                band=str(d["band"]),
                kind=d.get("kind", EXPERIMENT),
                station=d.get("station"),
                extra_power=float(d.get("extra_power_w", 0.0)),
                data_rate=float(d.get("data_rate_bps", 0.0)),
                downlink_rate=float(d.get("downlink_rate_bps", 0.0)),
                priority=int(d.get("priority", 0)),
                requires_contact=bool(d.get("requires_contact", False)),
            )
            for d in doc.get("entries", [])
        )
        skipped = tuple((str(d["id"]), str(d["reason"])) for d in doc.get("skipped", []))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SchemaError(f"malformed schedule document: {exc}") from None
    for e in entries:
        if e.kind not in (EXPERIMENT, DOWNLINK):
            raise SchemaError(f"entry {e.id}: unknown kind {e.kind}")
    return Schedule(entries, skipped)
