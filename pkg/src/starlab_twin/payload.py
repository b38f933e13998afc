"""Payload device state machine, onboard storage, and the FlatSat gate.

Each Minerva SDR drives at most one of its two front-end slots at a time;
the two SDRs and the optical terminal run independently of each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

from .errors import PayloadError
from .scenario import OPTICAL, ExperimentSpec, Scenario


class DeviceMode(Enum):
    OFF = "off"
    STANDBY = "standby"
    ACTIVE = "active"


_LEGAL = {
    (DeviceMode.OFF, DeviceMode.STANDBY),
    (DeviceMode.STANDBY, DeviceMode.OFF),
    (DeviceMode.STANDBY, DeviceMode.ACTIVE),
    (DeviceMode.ACTIVE, DeviceMode.STANDBY),
}


@dataclass(frozen=True)
class SdrState:
    mode: DeviceMode = DeviceMode.OFF
    active_slot: str | None = None


@dataclass(frozen=True)
class PayloadState:
    sdrs: Mapping[str, SdrState]
    slots: Mapping[str, tuple[str, ...]]
    optical: DeviceMode = DeviceMode.OFF
    storage_used: float = 0.0  # bytes
    storage_capacity: float = 200e9  # bytes
    active_experiments: frozenset[str] = frozenset()
    extra_power: Mapping[str, float] = field(default_factory=dict)

    def active_frontends(self) -> set[str]:
        return {s.active_slot for s in self.sdrs.values() if s.active_slot is not None}


def initial_state(scenario: Scenario) -> PayloadState:
    """Everything off, empty store."""
    return PayloadState(
        sdrs={sdr.id: SdrState() for sdr in scenario.sdrs},
        slots={sdr.id: tuple(sdr.slots) for sdr in scenario.sdrs},
        storage_capacity=scenario.platform.data_storage_capacity,
    )


def set_mode(state: PayloadState, device: str, mode: DeviceMode) -> PayloadState:
    """Move an SDR or the optical terminal (``device="optical"``) to ``mode``.

    Only adjacent transitions are legal; leaving Active clears the SDR's
    active slot. Setting the current mode again is a no-op.
    """
    current = state.optical if device == OPTICAL else _sdr(state, device).mode
    if current is mode:
        return state
    if (current, mode) not in _LEGAL:
        raise PayloadError(
            "illegal-transition", f"{device}: {current.value} -> {mode.value}"
        )
    if device == OPTICAL:
        return replace(state, optical=mode)
    slot = _sdr(state, device).active_slot if mode is DeviceMode.ACTIVE else None
    sdrs = dict(state.sdrs)
    sdrs[device] = SdrState(mode, slot)
    return replace(state, sdrs=sdrs)


def activate_frontend(state: PayloadState, sdr_id: str, frontend_id: str) -> PayloadState:
    sdr = _sdr(state, sdr_id)
    if frontend_id not in state.slots[sdr_id]:
        raise PayloadError("not-a-slot", f"{frontend_id} is not mounted on {sdr_id}")
    if sdr.mode is not DeviceMode.ACTIVE:
        raise PayloadError("sdr-not-active", f"{sdr_id} is {sdr.mode.value}")
    if sdr.active_slot == frontend_id:
        return state
    if sdr.active_slot is not None:
        raise PayloadError("slot-busy", f"{sdr_id} is already driving {sdr.active_slot}")
    sdrs = dict(state.sdrs)
    sdrs[sdr_id] = SdrState(DeviceMode.ACTIVE, frontend_id)
    return replace(state, sdrs=sdrs)


def release_frontend(state: PayloadState, sdr_id: str) -> PayloadState:
    sdrs = dict(state.sdrs)
    sdrs[sdr_id] = replace(_sdr(state, sdr_id), active_slot=None)
    return replace(state, sdrs=sdrs)


def _sdr(state: PayloadState, sdr_id: str) -> SdrState:
    try:
        return state.sdrs[sdr_id]
    except KeyError:
        raise PayloadError("unknown-device", sdr_id) from None


def record_data(state: PayloadState, nbytes: float) -> tuple[PayloadState, float]:
    """Store ``nbytes``; returns the new state and the tail-dropped overflow."""
    if nbytes < 0:
        raise ValueError("cannot record a negative amount")
    room = state.storage_capacity - state.storage_used
    kept = min(nbytes, room)
    return replace(state, storage_used=state.storage_used + kept), nbytes - kept


def drain_data(state: PayloadState, nbytes: float) -> tuple[PayloadState, float]:
    """Remove up to ``nbytes``; returns the new state and the amount drained."""
    if nbytes < 0:
        raise ValueError("cannot drain a negative amount")
    drained = min(nbytes, state.storage_used)
    return replace(state, storage_used=state.storage_used - drained), drained


def start_experiment(state: PayloadState, exp_id: str, extra_power: float) -> PayloadState:
    extra = dict(state.extra_power)
    extra[exp_id] = extra_power
    return replace(state, active_experiments=state.active_experiments | {exp_id}, extra_power=extra)


def stop_experiment(state: PayloadState, exp_id: str) -> PayloadState:
    extra = {k: v for k, v in state.extra_power.items() if k != exp_id}
    return replace(state, active_experiments=state.active_experiments - {exp_id}, extra_power=extra)


# ---------------------------------------------------------------------------
# FlatSat gate


@dataclass(frozen=True)
class Finding:
    code: str
    message: str


def experiment_devices(exp: ExperimentSpec, s: Scenario) -> set[str]:
    """SDR ids, front-end ids and ``optical`` an experiment occupies."""
    devices: set[str] = set(exp.required_frontends)
    for fe_id in exp.required_frontends:
        sdr = s.sdr_for(fe_id)
        if sdr is not None:
            devices.add(sdr.id)
    if exp.requires_optical:
        devices.add(OPTICAL)
    return devices


def devices_load(devices, s: Scenario) -> float:
    """Draw of the listed devices when all are active (SDRs at active power, optical at peak)."""
    load = sum(sdr.active_power for sdr in s.sdrs if sdr.id in devices)
    if OPTICAL in devices:
        load += s.optical.peak_power
    return load


def flatsat_check(exp: ExperimentSpec, s: Scenario) -> list[Finding]:
    """Static pre-flight feasibility; an empty list means the experiment passes."""
    findings: list[Finding] = []
    known = {fe.id for fe in s.frontends}
    per_sdr: dict[str, list[str]] = {}
    for fe_id in sorted(exp.required_frontends):
        if fe_id not in known:
            findings.append(Finding("unknown-frontend", f"{fe_id} does not exist"))
            continue
        sdr = s.sdr_for(fe_id)
        if sdr is None:
            findings.append(Finding("unmounted-frontend", f"{fe_id} is not in any SDR slot"))
            continue
        per_sdr.setdefault(sdr.id, []).append(fe_id)
    for sdr_id, fes in sorted(per_sdr.items()):
        if len(fes) > 1:
            findings.append(
                Finding("slot-conflict", f"{' and '.join(fes)} both sit on {sdr_id}")
            )

    worst = devices_load(experiment_devices(exp, s), s) + exp.extra_power
    if worst > s.platform.supply_peak:
        findings.append(
            Finding(
                "exceeds-peak-supply",
                f"worst-case load {worst:g} W > {s.platform.supply_peak:g} W",
            )
        )

    produced_bytes = exp.data_production_rate * exp.duration / 8.0
    if produced_bytes > s.platform.data_storage_capacity:
        findings.append(
            Finding(
                "exceeds-storage",
                f"{produced_bytes:.4g} B produced > {s.platform.data_storage_capacity:.4g} B store",
            )
        )

    if exp.duration > exp.latest_end - exp.earliest_start:
        findings.append(
            Finding(
                "window-too-short",
                f"{exp.duration:g} s does not fit in [{exp.earliest_start:g}, {exp.latest_end:g}]",
            )
        )
    return findings
