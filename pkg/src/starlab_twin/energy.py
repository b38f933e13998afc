"""Battery state of charge, payload load accounting, and solar generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .orbit import R_EARTH, propagate_inertial
from .scenario import GenerationModel, OrbitSpec, PlatformSpec

PEAK_SUPPLY = "peak-supply"
NOMINAL_SUPPLY = "nominal-supply"


@dataclass(frozen=True)
class EnergyState:
    soc: float  # Wh
    t: float = 0.0
    last_generation: float = 0.0
    last_load: float = 0.0
    depleted: bool = False  # the last step hit the empty clamp


@dataclass(frozen=True)
class LoadProfile:
    components: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.components.values())


def total_load(payload_state, scenario) -> LoadProfile:
    """Mode-dependent draw of every payload device plus active experiments' extra power."""
    from .payload import DeviceMode

    comps: dict[str, float] = {}
    for sdr in scenario.sdrs:
        st = payload_state.sdrs.get(sdr.id)
        if st is None or st.mode is DeviceMode.OFF:
            continue
        comps[sdr.id] = sdr.active_power if st.mode is DeviceMode.ACTIVE else sdr.standby_power
    if payload_state.optical is DeviceMode.ACTIVE:
        comps["optical"] = scenario.optical.peak_power
    elif payload_state.optical is DeviceMode.STANDBY:
        comps["optical"] = scenario.optical.standby_power
    extras = {e.id: e.extra_power for e in scenario.experiments}
    for exp_id in sorted(payload_state.active_experiments):
        comps[f"experiment:{exp_id}"] = payload_state.extra_power.get(exp_id, extras.get(exp_id, 0.0))
    return LoadProfile(comps)


def check_supply(load: LoadProfile | float, platform: PlatformSpec, sustained: bool = False) -> str | None:
    """Return ``None`` when the platform can supply ``load``, else the violated cap."""
    total = load.total if isinstance(load, LoadProfile) else float(load)
    if total > platform.supply_peak:
        return PEAK_SUPPLY
    if sustained and total > platform.supply_nominal:
        return NOMINAL_SUPPLY
    return None


def step(state: EnergyState, generation: float, load: float, dt: float, capacity: float) -> EnergyState:
    """Forward-Euler battery update with clamping to [0, capacity]."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    raw = state.soc + (generation - load) * dt / 3600.0
    return EnergyState(
        soc=min(max(raw, 0.0), capacity),
        t=state.t + dt,
        last_generation=generation,
        last_load=load,
        depleted=raw < 0.0,
    )


def sun_vector(model: GenerationModel) -> np.ndarray:
    ra, dec = math.radians(model.sun_ra), math.radians(model.sun_dec)
    return np.array([math.cos(dec) * math.cos(ra), math.cos(dec) * math.sin(ra), math.sin(dec)])


def in_shadow(orbit: OrbitSpec, t, model: GenerationModel):
    """Cylindrical Earth shadow test; vectorised over ``t``."""
    r = propagate_inertial(orbit, t)
    sun = sun_vector(model)
    along = r @ sun
    perp = np.linalg.norm(r - np.multiply.outer(along, sun), axis=-1)
    return (along < 0.0) & (perp < R_EARTH)


def generation_at(t: float, orbit: OrbitSpec, model: GenerationModel) -> float:
    if not model.eclipse_modeled:
        return model.sunlit_power
    return 0.0 if bool(in_shadow(orbit, t, model)) else model.sunlit_power
