"""Discrete-event simulation of a schedule over the pass geometry.

Time advances on the ``time_step`` grid, cut additionally at every entry
boundary and pass edge so that device loads are constant within a step.
Data volumes are kept in integer bits so the conservation identity holds
exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field

from .energy import EnergyState, generation_at, step, total_load
from .errors import PayloadError, ScheduleRejected, UnsupportedFormat
from .links import band_assessor
from .orbit import GeoSample, all_passes, elevation_and_range, orbital_period, propagate
from .payload import (
    DeviceMode,
    activate_frontend,
    drain_data,
    initial_state,
    record_data,
    release_frontend,
    set_mode,
    start_experiment,
    stop_experiment,
)
from .scenario import OPTICAL, Scenario, dump_scenario
from .scheduler import DOWNLINK, EXPERIMENT, Schedule, Violation, duty_cycle, schedule_to_dict, validate

EVENT_KINDS = (
    "mode-change",
    "pass-start",
    "pass-end",
    "link-open",
    "link-close",
    "overflow",
    "depletion",
    "violation",
)

ENERGY_HEADER = ("t_s", "soc_wh", "generation_w", "load_w")
STORAGE_HEADER = ("t_s", "used_bytes", "produced_bits", "downlinked_bits", "dropped_bits")


@dataclass(frozen=True)
class SimEvent:
    t: float
    kind: str
    device: str = ""
    detail: str = ""


@dataclass(frozen=True)
class PassVolume:
    station: str
    t_start: float
    t_end: float
    band: str
    bits: int


@dataclass
class Report:
    scenario_digest: str
    events: list[SimEvent] = field(default_factory=list)
    energy_trace: list[tuple[float, float, float, float]] = field(default_factory=list)
    storage_trace: list[tuple[float, float, int, int, int]] = field(default_factory=list)
    pass_volumes: list[PassVolume] = field(default_factory=list)
    duty_per_orbit: list[float] = field(default_factory=list)
    duty_min: float = 0.0
    violations: list[Violation] = field(default_factory=list)
    produced_bits: int = 0
    downlinked_bits: int = 0
    dropped_bits: int = 0
    remaining_bits: int = 0

    @property
    def max_load(self) -> float:
        return max((row[3] for row in self.energy_trace), default=0.0)


def scenario_digest(s: Scenario, sched: Schedule) -> str:
    h = hashlib.sha256()
    h.update(dump_scenario(s).encode())
    h.update(json.dumps(schedule_to_dict(sched), sort_keys=True).encode())
    h.update(f"seed={s.seed}".encode())
    return h.hexdigest()


class _Run:
    """Mutable state of one simulation run."""

    def __init__(self, s: Scenario, sched: Schedule, passes):
        self.s = s
        self.sched = sched
        self.passes = passes
        self.payload = initial_state(s)
        soc0 = s.platform.battery_capacity if s.platform.initial_soc is None else s.platform.initial_soc
        self.energy = EnergyState(soc=soc0)
        self.events: list[tuple[float, int, int, SimEvent]] = []
        self.users: dict[str, int] = {}
        self.produced = self.downlinked = self.dropped = 0
        self.stored = 0
        self.volumes: dict[tuple, int] = {}
        self.link_state: dict[str, bool] = {}
        self.assessors: dict[str, object] = {}
        self.peak_open = False
        self.depleted = False
        self.overflowing = False

    def emit(self, t: float, kind: str, device: str = "", detail: str = ""):
        self.events.append((t, EVENT_KINDS.index(kind), len(self.events), SimEvent(t, kind, device, detail)))

    def _mode(self, t, device, mode):
        try:
            self.payload = set_mode(self.payload, device, mode)
        except PayloadError as exc:
            self.emit(t, "violation", device, str(exc))
            return
        self.emit(t, "mode-change", device, mode.value)

    def _power_up(self, t, device):
        self.users[device] = self.users.get(device, 0) + 1
        if self.users[device] == 1:
            self._mode(t, device, DeviceMode.STANDBY)
            self._mode(t, device, DeviceMode.ACTIVE)

    def _power_down(self, t, device):
        self.users[device] -= 1
        if self.users[device] == 0:
            self._mode(t, device, DeviceMode.STANDBY)
            self._mode(t, device, DeviceMode.OFF)

    def start(self, t, e):
        for sdr in self.s.sdrs:
            if sdr.id in e.devices:
                self._power_up(t, sdr.id)
                for fe_id in sdr.slots:
                    if fe_id in e.devices:
                        try:
                            self.payload = activate_frontend(self.payload, sdr.id, fe_id)
                            self.emit(t, "mode-change", fe_id, f"active on {sdr.id}")
                        except PayloadError as exc:
                            self.emit(t, "violation", fe_id, str(exc))
        if OPTICAL in e.devices:
            self._power_up(t, OPTICAL)
        if e.kind == EXPERIMENT:
            self.payload = start_experiment(self.payload, e.id, e.extra_power)
        else:
            self.link_state[e.id] = False

    def end(self, t, e):
        if e.kind == EXPERIMENT:
            self.payload = stop_experiment(self.payload, e.id)
        elif self.link_state.pop(e.id, False):
            self.emit(t, "link-close", e.station or "", f"{e.id} {e.band} session end")
        for sdr in self.s.sdrs:
            if sdr.id in e.devices:
                active = self.payload.sdrs[sdr.id].active_slot
                if active in e.devices:
                    self.payload = release_frontend(self.payload, sdr.id)
                    self.emit(t, "mode-change", active, f"released from {sdr.id}")
                self._power_down(t, sdr.id)
        if OPTICAL in e.devices:
            self._power_down(t, OPTICAL)

    def _assess(self, e, t):
        if e.band not in self.assessors:
            self.assessors[e.band] = band_assessor(self.s, e.band)
        station = self.s.station(e.station)
        pos = propagate(self.s.orbit, t)
        el, rng = elevation_and_range(pos, station)
        sample = GeoSample(t, tuple(float(x) for x in pos), el, rng)
        return self.assessors[e.band](sample)

    def _pass_key(self, station: str, t: float):
        for w in self.passes:
            if w.station == station and w.t_start <= t <= w.t_end:
                return (station, w.t_start, w.t_end)
        return (station, -1.0, -1.0)

    def advance(self, a: float, b: float, active):
        s = self.s
        dt = b - a
        load = total_load(self.payload, s).total
        gen = generation_at(a, s.orbit, s.generation_model)
        if load > s.platform.supply_peak:
            if not self.peak_open:
                self.emit(a, "violation", "bus", f"peak-supply: {load:g} W")
            self.peak_open = True
        else:
            self.peak_open = False
        self.energy = step(self.energy, gen, load, dt, s.platform.battery_capacity)
        if self.energy.depleted and not self.depleted:
            self.emit(b, "depletion", "battery", f"load {load:g} W, generation {gen:g} W")
        self.depleted = self.energy.depleted

        dropped_now = 0
        for e in active:
            if e.kind != EXPERIMENT or e.data_rate <= 0:
                continue
            bits = int(round(e.data_rate * dt))
            self.payload, dropped_bytes = record_data(self.payload, bits / 8.0)
            lost = int(round(dropped_bytes * 8.0))
            self.produced += bits
            self.dropped += lost
            self.stored += bits - lost
            dropped_now += lost
        if dropped_now and not self.overflowing:
            self.emit(b, "overflow", "store", f"dropped {dropped_now} bits")
        self.overflowing = dropped_now > 0

        for e in active:
            if e.kind != DOWNLINK:
                continue
            verdict = self._assess(e, a)
            if verdict.closed != self.link_state.get(e.id, False):
                kind = "link-open" if verdict.closed else "link-close"
                self.emit(a, kind, e.station, f"{e.id} {e.band} {verdict.limiting_factor}")
                self.link_state[e.id] = verdict.closed
            if not verdict.closed:
                continue
            want = int(round(verdict.achievable_rate * dt))
            self.payload, drained_bytes = drain_data(self.payload, want / 8.0)
            got = int(round(drained_bytes * 8.0))
            self.downlinked += got
            self.stored -= got
            key = (*self._pass_key(e.station, a), e.band)
            self.volumes[key] = self.volumes.get(key, 0) + got
        return gen, load


def _breakpoints(s: Scenario, entries, passes) -> list[float]:
    dur = s.sim_duration
    pts = {0.0, dur}
    k = 1
    while k * s.time_step < dur:
        pts.add(k * s.time_step)
        k += 1
    for e in entries:
        pts.update((e.t_start, e.t_end))
    for w in passes:
        pts.update((w.t_start, w.t_end))
    return sorted(t for t in pts if 0.0 <= t <= dur)


def run(s: Scenario, sched: Schedule, *, force: bool = False, passes=None) -> Report:
    """Execute ``sched`` against ``s`` and return the full report.

    Raises ScheduleRejected when the schedule has violations unless
    ``force`` is set, in which case they are re-emitted as events.
    """
    passes = all_passes(s) if passes is None else passes
    violations = validate(sched, s, passes)
    if violations and not force:
        raise ScheduleRejected(violations)

    dur = s.sim_duration
    entries = [e for e in sched.entries if e.t_end > 0.0 and e.t_start < dur and e.t_end > e.t_start]
    entries = [
        e if 0.0 <= e.t_start and e.t_end <= dur else _clip(e, dur) for e in entries
    ]
    r = _Run(s, sched, passes)
    for w in passes:
        r.emit(w.t_start, "pass-start", w.station, f"max_el={w.max_elevation:.2f}")
        r.emit(w.t_end, "pass-end", w.station, f"duration={w.duration:.1f}")
    for v in violations:
        r.emit(v.t, "violation", v.code, v.detail)

    starts: dict[float, list] = {}
    ends: dict[float, list] = {}
    for e in entries:
        starts.setdefault(e.t_start, []).append(e)
        ends.setdefault(e.t_end, []).append(e)

    cuts = _breakpoints(s, entries, passes)
    energy_trace = []
    storage_trace = [(0.0, 0.0, 0, 0, 0)]
    active: list = []
    for a, b in zip(cuts, cuts[1:]):
        for e in ends.get(a, []):
            r.end(a, e)
            active.remove(e)
        for e in starts.get(a, []):
            r.start(a, e)
            active.append(e)
        soc_before = r.energy.soc
        gen, load = r.advance(a, b, active)
        energy_trace.append((a, soc_before, gen, load))
        storage_trace.append((b, r.payload.storage_used, r.produced, r.downlinked, r.dropped))
    for e in ends.get(dur, []):
        r.end(dur, e)
    energy_trace.append((dur, r.energy.soc, r.energy.last_generation, total_load(r.payload, s).total))

    T = orbital_period(s.orbit.altitude)
    per_orbit, dmin = duty_cycle(entries, T, dur)
    volumes = [
        PassVolume(st, t0, t1, band, bits)
        for (st, t0, t1, band), bits in sorted(r.volumes.items())
    ]
    events = [ev for *_, ev in sorted(r.events, key=lambda x: x[:3])]
    return Report(
        scenario_digest=scenario_digest(s, sched),
        events=events,
        energy_trace=energy_trace,
        storage_trace=storage_trace,
        pass_volumes=volumes,
        duty_per_orbit=per_orbit,
        duty_min=dmin,
        violations=violations,
        produced_bits=r.produced,
        downlinked_bits=r.downlinked,
        dropped_bits=r.dropped,
        remaining_bits=r.stored,
    )


def _clip(e, dur):
    from dataclasses import replace

    return replace(e, t_start=max(0.0, e.t_start), t_end=min(dur, e.t_end))


# ---------------------------------------------------------------------------
# Serialisation


def report_to_dict(r: Report) -> dict:
    return {
        "scenario_digest": r.scenario_digest,
        "events": [asdict(e) for e in r.events],
        "energy_trace": [dict(zip(ENERGY_HEADER, row)) for row in r.energy_trace],
        "storage_trace": [dict(zip(STORAGE_HEADER, row)) for row in r.storage_trace],
        "pass_volumes": [asdict(v) for v in r.pass_volumes],
        "duty_cycle": {"per_orbit": list(r.duty_per_orbit), "min": r.duty_min},
        "violations": [asdict(v) for v in r.violations],
        "totals": {
            "produced_bits": r.produced_bits,
            "downlinked_bits": r.downlinked_bits,
            "dropped_bits": r.dropped_bits,
            "remaining_bits": r.remaining_bits,
        },
    }


def report_from_dict(doc: dict) -> Report:
    totals = doc["totals"]
    return Report(
        scenario_digest=doc["scenario_digest"],
        events=[SimEvent(**e) for e in doc["events"]],
        energy_trace=[tuple(row[k] for k in ENERGY_HEADER) for row in doc["energy_trace"]],
        storage_trace=[tuple(row[k] for k in STORAGE_HEADER) for row in doc["storage_trace"]],
        pass_volumes=[PassVolume(**v) for v in doc["pass_volumes"]],
        duty_per_orbit=list(doc["duty_cycle"]["per_orbit"]),
        duty_min=doc["duty_cycle"]["min"],
        violations=[Violation(**v) for v in doc["violations"]],
        produced_bits=totals["produced_bits"],
        downlinked_bits=totals["downlinked_bits"],
        dropped_bits=totals["dropped_bits"],
        remaining_bits=totals["remaining_bits"],
    )


def _csv(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{float(v):.6g}" for v in row])
    return buf.getvalue().encode()


def emit_report(r: Report, format: str = "json"):
    """``json`` -> bytes of the full report; ``csv`` -> {filename: bytes} per trace."""
    if format == "json":
        return (json.dumps(report_to_dict(r), sort_keys=True, indent=1) + "\n").encode()
    if format == "csv":
        return {
            "report_energy.csv": _csv(ENERGY_HEADER, r.energy_trace),
            "report_storage.csv": _csv(STORAGE_HEADER, r.storage_trace),
        }
    raise UnsupportedFormat(f"unsupported report format: {format}")
