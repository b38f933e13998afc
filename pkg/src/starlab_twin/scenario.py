"""Scenario model: domain types, the 6GStarLab baseline, and JSON ingestion.

All quantities are SI internally (s, Hz, bit/s, W, Wh, bytes), except
distances which are kept in km and angles in degrees. The JSON document
uses unit-suffixed keys (``battery_capacity_wh``, ``ranges_mhz``...) and
is converted at the boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Mapping

from .errors import DanglingReferenceError, ParseError, SchemaError

GB = 1e9
MBPS = 1e6
MHZ = 1e6

OPTICAL = "optical"
TTC = "TTC"
BANDS = ("UHF", "L/S", "X", "Ka")


@dataclass(frozen=True)
class PlatformSpec:
    """Bus-level capabilities (power, storage, TTC link, lifetime)."""

    form_factor: str = "6U CubeSat"
    payload_mass_limit: float = 8.0  # kg
    payload_volume_limit: float = 4.0  # CubeSat units
    avg_power_available: tuple[float, float] = (7.0, 20.0)  # W
    payload_peak_power_ceiling: float = 160.0  # W, metadata only
    supply_nominal: float = 45.0  # W, continuous
    supply_peak: float = 85.0  # W, operative payload cap
    battery_capacity: float = 42.0  # Wh
    initial_soc: float | None = None  # Wh; None means full
    data_storage_capacity: float = 200 * GB  # bytes
    ttc_downlink_rate: float = 5 * MBPS  # bit/s
    duty_cycle_floor: float = 0.15
    lifetime: float = 3.0  # years


@dataclass(frozen=True)
class FrontEnd:
    id: str
    band: str
    freq_ranges: tuple[tuple[float, float], ...]  # Hz
    max_gross_rate: float | None = None  # bit/s
    max_bandwidth: float | None = None  # Hz
    antenna_gain: float = 0.0  # dBi
    use_case: str = ""
    active_range: int = 0  # index into freq_ranges used for link budgets

    @property
    def center_frequency(self) -> float:
        low, high = self.freq_ranges[self.active_range]
        return 0.5 * (low + high)


@dataclass(frozen=True)
class SdrUnit:
    id: str
    slots: tuple[str, ...]
    standby_power: float = 10.0
    active_power: float = 30.0


@dataclass(frozen=True)
class OpticalTerminal:
    standby_power: float = 4.0
    peak_power: float = 25.0
    downlink_wavelength: float = 1530.0  # nm
    downlink_tx_power: float = 1.0  # W
    downlink_max_rate: float = 1e9
    uplink_wavelength: float = 1560.0  # nm
    uplink_max_rate: float = 100 * MBPS
    range_min: float = 500.0  # km
    range_max: float = 1500.0  # km
    pointing_requirement_3sigma: float = 1.0  # deg
    pointing_error_3sigma: float = 0.5  # deg, achieved by the ADCS


@dataclass(frozen=True)
class OrbitSpec:
    altitude: float = 550.0  # km
    inclination: float = 97.6
    raan: float = 0.0
    initial_true_anomaly: float = 0.0
    epoch: float = 0.0  # s


@dataclass(frozen=True)
class GroundStation:
    name: str
    latitude: float
    longitude: float
    altitude: float = 0.0  # m
    min_elevation: float = 0.0
    supported_bands: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ExperimentSpec:
    """An uploaded experiment request.

    ``requires_contact`` experiments (the default) can only run while a
    ground station supporting every used band is in view with the link
    closed; background experiments (on-board processing, store-and-forward
    IoT collection) only need their front-ends.
    """

    id: str
    duration: float
    latest_end: float
    priority: int = 0
    required_frontends: frozenset[str] = frozenset()
    requires_optical: bool = False
    extra_power: float = 0.0
    data_production_rate: float = 0.0  # bit/s
    earliest_start: float = 0.0
    requires_contact: bool = True


@dataclass(frozen=True)
class RfLinkParams:
    """Placeholder RF budget terms; ``tx_gain=None`` uses the front-end antenna gain."""

    tx_power: float = 0.0  # dBW
    tx_gain: float | None = None  # dBi
    rx_gain: float = 0.0  # dBi
    system_losses: float = 0.0  # dB
    required_margin: float = 0.0  # dB
    rx_figure_of_merit: float = 0.0  # G/T, dB/K
    required_cn0: float | None = None  # dBHz


@dataclass(frozen=True)
class GenerationModel:
    sunlit_power: float = 14.0  # W
    eclipse_modeled: bool = False
    sun_ra: float = 0.0  # deg, fixed inertial sun direction
    sun_dec: float = 0.0


@dataclass(frozen=True)
class Scenario:
    platform: PlatformSpec = field(default_factory=PlatformSpec)
    sdrs: tuple[SdrUnit, ...] = ()
    frontends: tuple[FrontEnd, ...] = ()
    optical: OpticalTerminal = field(default_factory=OpticalTerminal)
    orbit: OrbitSpec = field(default_factory=OrbitSpec)
    stations: tuple[GroundStation, ...] = ()
    experiments: tuple[ExperimentSpec, ...] = ()
    links: Mapping[str, RfLinkParams] = field(default_factory=dict)
    sim_duration: float = 86400.0
    time_step: float = 10.0
    seed: int = 0
    generation_model: GenerationModel = field(default_factory=GenerationModel)
    enforce_duty_floor: bool = False

    def frontend(self, fe_id: str) -> FrontEnd:
        for fe in self.frontends:
            if fe.id == fe_id:
                return fe
        raise KeyError(fe_id)

    def sdr_for(self, fe_id: str) -> SdrUnit | None:
        for sdr in self.sdrs:
            if fe_id in sdr.slots:
                return sdr
        return None

    def station(self, name: str) -> GroundStation:
        for st in self.stations:
            if st.name == name:
                return st
        raise KeyError(name)

    def experiment(self, exp_id: str) -> ExperimentSpec:
        for exp in self.experiments:
            if exp.id == exp_id:
                return exp
        raise KeyError(exp_id)

    def link_params(self, band: str) -> RfLinkParams:
        return self.links[band]

    def ttc_frontend(self) -> FrontEnd:
        """The platform operations link, kept apart from the payload front-ends."""
        return FrontEnd(
            id=TTC,
            band=TTC,
            freq_ranges=((2200 * MHZ, 2290 * MHZ),),
            max_gross_rate=self.platform.ttc_downlink_rate,
            antenna_gain=6.0,
            use_case="TM/TC",
        )


# ---------------------------------------------------------------------------
# Baseline


def default_frontends() -> tuple[FrontEnd, ...]:
    return (
        FrontEnd(
            id="FE1",
            band="UHF",
            freq_ranges=(
                (433.00 * MHZ, 434.79 * MHZ),
                (863.00 * MHZ, 870.00 * MHZ),
                (903.00 * MHZ, 914.20 * MHZ),
            ),
            max_gross_rate=50e3,
            max_bandwidth=0.125 * MHZ,
            antenna_gain=3.0,
            use_case="DtS-IoT",
        ),
        FrontEnd(
            id="FE2",
            band="L/S",
            freq_ranges=((1980.0 * MHZ, 2025.0 * MHZ), (2160.0 * MHZ, 2200.0 * MHZ)),
            max_gross_rate=1.152 * MBPS,
            max_bandwidth=0.75 * MHZ,
            antenna_gain=10.0,
            use_case="DtS-IoT NTN (n256)",
            active_range=1,
        ),
        FrontEnd(
            id="FE3",
            band="X",
            freq_ranges=((10.45e9, 10.50e9),),
            max_gross_rate=2.3 * MBPS,
            max_bandwidth=1.5 * MHZ,
            antenna_gain=11.0,
            use_case="Data backhauling",
        ),
        FrontEnd(
            id="FE4",
            band="Ka",
            freq_ranges=((19.30e9, 20.10e9), (29.10e9, 30.00e9)),
            max_gross_rate=4.6 * MBPS,
            max_bandwidth=3.0 * MHZ,
            antenna_gain=11.0,
            use_case="NTN (n511)",
        ),
    )


def default_links() -> dict[str, RfLinkParams]:
    # Calibrated so every RF band closes at >= 10 deg elevation from 550 km.
    return {
        "UHF": RfLinkParams(0.0, None, 0.0, 3.0, 3.0, -15.0, 57.0),
        "L/S": RfLinkParams(0.0, None, 0.0, 3.0, 3.0, 15.0, 70.6),
        "X": RfLinkParams(0.0, None, 0.0, 3.0, 3.0, 25.0, 73.6),
        "Ka": RfLinkParams(0.0, None, 0.0, 3.0, 3.0, 28.0, 76.6),
        TTC: RfLinkParams(0.0, None, 0.0, 3.0, 3.0, 15.0, 77.0),
    }


def default_scenario() -> Scenario:
    """Baseline 6GStarLab world with no experiment requests."""
    return Scenario(
        platform=PlatformSpec(),
        sdrs=(
            SdrUnit("Minerva-A", ("FE1", "FE2")),
            SdrUnit("Minerva-B", ("FE3", "FE4")),
        ),
        frontends=default_frontends(),
        optical=OpticalTerminal(),
        orbit=OrbitSpec(),
        stations=(
            GroundStation(
                "Barcelona", 41.3874, 2.1686, 12.0, 0.0,
                frozenset({"UHF", "L/S", "X", "Ka", TTC}),
            ),
            GroundStation("Montsec", 42.0514, 0.7294, 1570.0, 10.0, frozenset({OPTICAL})),
        ),
        experiments=(),
        links=default_links(),
    )


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Issue:
    code: str
    message: str


def _normalized(angle: float) -> bool:
    return 0.0 <= angle < 360.0


def validate_scenario(s: Scenario) -> list[Issue]:
    """Return every type-invariant violation; an empty list means valid."""
    issues: list[Issue] = []
    add = lambda code, msg: issues.append(Issue(code, msg))  # noqa: E731

    p = s.platform
    if not p.supply_nominal <= p.supply_peak <= p.payload_peak_power_ceiling:
        add("supply-order", "need supply_nominal <= supply_peak <= payload_peak_power_ceiling")
    if not 0.0 < p.duty_cycle_floor < 1.0:
        add("duty-floor-range", f"duty_cycle_floor {p.duty_cycle_floor} not in (0, 1)")
    if not p.battery_capacity > 0:
        add("nonpositive-capacity", "battery_capacity must be > 0")
    if not p.data_storage_capacity > 0:
        add("nonpositive-capacity", "data_storage_capacity must be > 0")
    if p.initial_soc is not None and not 0.0 <= p.initial_soc <= p.battery_capacity:
        add("soc-out-of-range", "initial_soc must lie in [0, battery_capacity]")
    if p.ttc_downlink_rate <= 0:
        add("nonpositive-rate", "ttc_downlink_rate must be > 0")

    fe_ids = [fe.id for fe in s.frontends]
    if len(set(fe_ids)) != len(fe_ids):
        add("duplicate-id", "front-end ids must be unique")
    for fe in s.frontends:
        if not fe.freq_ranges:
            add("bad-range", f"{fe.id} has no frequency ranges")
        for low, high in fe.freq_ranges:
            if not 0 < low < high:
                add("bad-range", f"{fe.id} range ({low}, {high}) needs 0 < low < high")
        ordered = sorted(fe.freq_ranges)
        for (_, h1), (l2, _) in zip(ordered, ordered[1:]):
            if l2 < h1:
                add("overlapping-ranges", f"{fe.id} has overlapping ranges")
        if fe.max_gross_rate is not None and fe.max_gross_rate <= 0:
            add("nonpositive-rate", f"{fe.id} max_gross_rate must be > 0")
        if not 0 <= fe.active_range < max(1, len(fe.freq_ranges)):
            add("bad-range", f"{fe.id} active_range index out of bounds")

    known = set(fe_ids)
    sdr_ids = [sdr.id for sdr in s.sdrs]
    if len(set(sdr_ids)) != len(sdr_ids):
        add("duplicate-id", "SDR ids must be unique")
    claimed: dict[str, str] = {}
    for sdr in s.sdrs:
        if len(sdr.slots) != 2:
            add("sdr-slot-count", f"{sdr.id} must have exactly 2 slots")
        if len(set(sdr.slots)) != len(sdr.slots):
            add("duplicate-slot", f"{sdr.id} lists the same front-end twice")
        if not sdr.standby_power < sdr.active_power:
            add("sdr-power-order", f"{sdr.id} standby power must be below active power")
        for slot in sdr.slots:
            if slot not in known:
                add("dangling-frontend", f"{sdr.id} slot references unknown front-end {slot}")
            elif slot in claimed and claimed[slot] != sdr.id:
                add("duplicate-slot", f"{slot} is mounted on both {claimed[slot]} and {sdr.id}")
            claimed.setdefault(slot, sdr.id)

    o = s.optical
    if not o.range_min < o.range_max:
        add("optical-range-order", "optical range_min must be below range_max")
    if not o.pointing_requirement_3sigma > 0:
        add("pointing-nonpositive", "pointing requirement must be > 0")

    if not s.orbit.altitude > 0:
        add("altitude-nonpositive", "orbit altitude must be > 0")
    for name in ("inclination", "raan", "initial_true_anomaly"):
        if not _normalized(getattr(s.orbit, name)):
            add("angle-not-normalized", f"orbit {name} must lie in [0, 360)")

    names = [st.name for st in s.stations]
    if len(set(names)) != len(names):
        add("duplicate-id", "station names must be unique")
    for st in s.stations:
        if not abs(st.latitude) <= 90.0:
            add("latitude-out-of-range", f"station {st.name} latitude {st.latitude}")
        if not 0.0 <= st.min_elevation < 90.0:
            add("elevation-out-of-range", f"station {st.name} min_elevation {st.min_elevation}")

    exp_ids = [e.id for e in s.experiments]
    if len(set(exp_ids)) != len(exp_ids):
        add("duplicate-id", "experiment ids must be unique")
    for e in s.experiments:
        if not e.duration > 0:
            add("experiment-duration", f"experiment {e.id} duration must be > 0")
        if not e.earliest_start < e.latest_end:
            add("experiment-window", f"experiment {e.id} needs earliest_start < latest_end")
        if e.data_production_rate < 0:
            add("negative-data-rate", f"experiment {e.id} data rate is negative")
        for fe_id in sorted(e.required_frontends):
            if fe_id not in known:
                add("dangling-frontend", f"experiment {e.id} references unknown front-end {fe_id}")

    for band, params in s.links.items():
        if params.system_losses < 0 or params.required_margin < 0:
            add("link-params", f"link {band} losses and margin must be >= 0")

    if not s.time_step > 0:
        add("time-step", "time_step must be > 0")
    elif not s.sim_duration >= s.time_step:
        add("sim-duration", "sim_duration must be >= time_step")
    return issues


# ---------------------------------------------------------------------------
# JSON document <-> Scenario
#
# A field table maps each document key to an attribute, a scale factor
# (document unit -> SI) and a type checker.


def _num(v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    if not math.isfinite(v):
        raise TypeError("expected a finite number")
    return float(v)


def _int(v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected an integer")
    return v


def _str(v: Any) -> str:
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


def _bool(v: Any) -> bool:
    if not isinstance(v, bool):
        raise TypeError("expected a boolean")
    return v


def _opt(check: Callable[[Any], Any]) -> Callable[[Any], Any]:
    return lambda v: None if v is None else check(v)


def _str_list(v: Any) -> list[str]:
    if not isinstance(v, list):
        raise TypeError("expected a list of strings")
    return [_str(x) for x in v]


def _pairs(v: Any) -> list[tuple[float, float]]:
    if not isinstance(v, list) or not all(isinstance(p, list) and len(p) == 2 for p in v):
        raise TypeError("expected a list of [low, high] pairs")
    return [(_num(a), _num(b)) for a, b in v]


@dataclass(frozen=True)
class _F:
    key: str
    attr: str
    check: Callable[[Any], Any]
    scale: float = 1.0


PLATFORM_FIELDS = (
    _F("form_factor", "form_factor", _str),
    _F("payload_mass_kg", "payload_mass_limit", _num),
    _F("payload_volume_u", "payload_volume_limit", _num),
    _F("avg_power_min_w", "avg_power_available[0]", _num),
    _F("avg_power_max_w", "avg_power_available[1]", _num),
    _F("payload_peak_power_w", "payload_peak_power_ceiling", _num),
    _F("supply_nominal_w", "supply_nominal", _num),
    _F("supply_peak_w", "supply_peak", _num),
    _F("battery_capacity_wh", "battery_capacity", _num),
    _F("initial_soc_wh", "initial_soc", _opt(_num)),
    _F("data_storage_gb", "data_storage_capacity", _num, GB),
    _F("ttc_rate_mbps", "ttc_downlink_rate", _num, MBPS),
    _F("duty_cycle_floor", "duty_cycle_floor", _num),
    _F("lifetime_years", "lifetime", _num),
)
ORBIT_FIELDS = (
    _F("altitude_km", "altitude", _num),
    _F("inclination_deg", "inclination", _num),
    _F("raan_deg", "raan", _num),
    _F("true_anomaly_deg", "initial_true_anomaly", _num),
    _F("epoch_s", "epoch", _num),
)
SDR_FIELDS = (
    _F("id", "id", _str),
    _F("slots", "slots", _str_list),
    _F("standby_w", "standby_power", _num),
    _F("active_w", "active_power", _num),
)
FRONTEND_FIELDS = (
    _F("id", "id", _str),
    _F("band", "band", _str),
    _F("ranges_mhz", "freq_ranges", _pairs, MHZ),
    _F("active_range", "active_range", _int),
    _F("max_rate_mbps", "max_gross_rate", _opt(_num), MBPS),
    _F("bandwidth_mhz", "max_bandwidth", _opt(_num), MHZ),
    _F("gain_dbi", "antenna_gain", _num),
    _F("use_case", "use_case", _str),
)
OPTICAL_FIELDS = (
    _F("standby_w", "standby_power", _num),
    _F("peak_w", "peak_power", _num),
    _F("downlink_wavelength_nm", "downlink_wavelength", _num),
    _F("downlink_tx_power_w", "downlink_tx_power", _num),
    _F("downlink_rate_mbps", "downlink_max_rate", _num, MBPS),
    _F("uplink_wavelength_nm", "uplink_wavelength", _num),
    _F("uplink_rate_mbps", "uplink_max_rate", _num, MBPS),
    _F("range_min_km", "range_min", _num),
    _F("range_max_km", "range_max", _num),
    _F("pointing_requirement_deg", "pointing_requirement_3sigma", _num),
    _F("pointing_error_deg", "pointing_error_3sigma", _num),
)
STATION_FIELDS = (
    _F("name", "name", _str),
    _F("lat_deg", "latitude", _num),
    _F("lon_deg", "longitude", _num),
    _F("alt_m", "altitude", _num),
    _F("min_elevation_deg", "min_elevation", _num),
    _F("bands", "supported_bands", _str_list),
)
EXPERIMENT_FIELDS = (
    _F("id", "id", _str),
    _F("priority", "priority", _int),
    _F("frontends", "required_frontends", _str_list),
    _F("optical", "requires_optical", _bool),
    _F("requires_contact", "requires_contact", _bool),
    _F("duration_s", "duration", _num),
    _F("extra_power_w", "extra_power", _num),
    _F("data_rate_mbps", "data_production_rate", _num, MBPS),
    _F("earliest_start_s", "earliest_start", _num),
    _F("latest_end_s", "latest_end", _num),
)
LINK_FIELDS = (
    _F("tx_power_dbw", "tx_power", _num),
    _F("tx_gain_dbi", "tx_gain", _opt(_num)),
    _F("rx_gain_dbi", "rx_gain", _num),
    _F("system_losses_db", "system_losses", _num),
    _F("required_margin_db", "required_margin", _num),
    _F("rx_gt_dbk", "rx_figure_of_merit", _num),
    _F("required_cn0_dbhz", "required_cn0", _opt(_num)),
)
GENERATION_FIELDS = (
    _F("sunlit_w", "sunlit_power", _num),
    _F("eclipse_modeled", "eclipse_modeled", _bool),
    _F("sun_ra_deg", "sun_ra", _num),
    _F("sun_dec_deg", "sun_dec", _num),
)
SIM_FIELDS = (
    _F("duration_s", "sim_duration", _num),
    _F("step_s", "time_step", _num),
    _F("seed", "seed", _int),
    _F("enforce_duty_floor", "enforce_duty_floor", _bool),
)

TOP_KEYS = (
    "platform", "orbit", "sdrs", "frontends", "optical", "stations",
    "experiments", "links", "generation", "sim",
)


def _to_doc(value: float, scale: float) -> float:
    """Divide by ``scale`` choosing the float that multiplies back exactly."""
    if scale == 1.0:
        return value
    q = value / scale
    for direction in (math.inf, -math.inf):
        cand = q
        for _ in range(4):
            if cand * scale == value:
                return cand
            cand = math.nextafter(cand, direction)
    return q


def _read_attr(obj: Any, attr: str) -> Any:
    if attr.endswith("]"):
        name, idx = attr[:-1].split("[")
        return getattr(obj, name)[int(idx)]
    return getattr(obj, attr)


def _emit_value(value: Any, f: _F) -> Any:
    if value is None:
        return None
    if f.check is _pairs:
        return [[_to_doc(lo, f.scale), _to_doc(hi, f.scale)] for lo, hi in value]
    if f.check is _str_list:
        return sorted(value) if isinstance(value, (set, frozenset)) else list(value)
    if isinstance(value, float):
        return _to_doc(value, f.scale)
    return value


def _emit_section(obj: Any, table: tuple[_F, ...]) -> dict[str, Any]:
    return {f.key: _emit_value(_read_attr(obj, f.attr), f) for f in table}


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    return {
        "platform": _emit_section(s.platform, PLATFORM_FIELDS),
        "orbit": _emit_section(s.orbit, ORBIT_FIELDS),
        "sdrs": [_emit_section(x, SDR_FIELDS) for x in s.sdrs],
        "frontends": [_emit_section(x, FRONTEND_FIELDS) for x in s.frontends],
        "optical": _emit_section(s.optical, OPTICAL_FIELDS),
        "stations": [_emit_section(x, STATION_FIELDS) for x in s.stations],
        "experiments": [_emit_section(x, EXPERIMENT_FIELDS) for x in s.experiments],
        "links": {band: _emit_section(p, LINK_FIELDS) for band, p in sorted(s.links.items())},
        "generation": _emit_section(s.generation_model, GENERATION_FIELDS),
        "sim": {
            "duration_s": s.sim_duration,
            "step_s": s.time_step,
            "seed": s.seed,
            "enforce_duty_floor": s.enforce_duty_floor,
        },
    }


def dump_scenario(s: Scenario) -> str:
    """Canonical JSON text of a scenario (sorted keys, two-space indent)."""
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n"


def _parse_section(doc: Any, table: tuple[_F, ...], where: str) -> dict[str, Any]:
    """Check keys/types of one JSON object; return {attr: SI value} for present keys."""
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected an object")
    by_key = {f.key: f for f in table}
    out: dict[str, Any] = {}
    for key, raw in doc.items():
        f = by_key.get(key)
        if f is None:
            raise SchemaError(f"{where}.{key}: unknown key")
        try:
            value = f.check(raw)
        except TypeError as exc:
            raise SchemaError(f"{where}.{key}: {exc}") from None
        if value is not None and f.scale != 1.0:
            if f.check is _pairs:
                value = [(lo * f.scale, hi * f.scale) for lo, hi in value]
            else:
                value = value * f.scale
        out[f.attr] = value
    return out


def _coerce(cls: type, values: dict[str, Any]) -> dict[str, Any]:
    """Convert list-valued attributes to the tuple/frozenset the dataclass stores."""
    kinds = {f.name: str(f.type) for f in fields(cls)}
    out = {}
    for attr, value in values.items():
        kind = kinds.get(attr, "")
        if isinstance(value, list):
            value = frozenset(value) if kind.startswith("frozenset") else tuple(value)
        out[attr] = value
    return out


def _merge(base: Any, doc: Any, table: tuple[_F, ...], where: str) -> Any:
    values = _parse_section(doc, table, where)
    if "avg_power_available[0]" in values or "avg_power_available[1]" in values:
        lo, hi = base.avg_power_available
        values["avg_power_available"] = (
            values.pop("avg_power_available[0]", lo),
            values.pop("avg_power_available[1]", hi),
        )
    return replace(base, **_coerce(type(base), values))


def _build_list(
    docs: Any,
    table: tuple[_F, ...],
    cls: type,
    key_attr: str,
    defaults: Mapping[str, Any],
    where: str,
) -> tuple:
    """Array elements fall back to the default element with the same id, else to type defaults."""
    if not isinstance(docs, list):
        raise SchemaError(f"{where}: expected an array")
    out = []
    for i, doc in enumerate(docs):
        here = f"{where}[{i}]"
        values = _coerce(cls, _parse_section(doc, table, here))
        key = values.get(key_attr)
        if key is None:
            raise SchemaError(f"{here}: missing required key for {key_attr}")
        base = defaults.get(key)
        if base is not None:
            out.append(replace(base, **values))
            continue
        try:
            out.append(cls(**values))
        except TypeError as exc:
            raise SchemaError(f"{here}: {exc}") from None
    return tuple(out)


def load_scenario(document: str | bytes) -> Scenario:
    """Parse a scenario JSON document on top of :func:`default_scenario`.

    Objects merge key by key into the defaults; arrays replace the default
    array wholesale. Raises ParseError, SchemaError, or
    DanglingReferenceError.
    """
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed scenario document: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a JSON object")
    for key in doc:
        if key not in TOP_KEYS:
            raise SchemaError(f"{key}: unknown key")

    base = default_scenario()
    kw: dict[str, Any] = {}
    if "platform" in doc:
        kw["platform"] = _merge(base.platform, doc["platform"], PLATFORM_FIELDS, "platform")
    if "orbit" in doc:
        orbit = _merge(base.orbit, doc["orbit"], ORBIT_FIELDS, "orbit")
        kw["orbit"] = replace(
            orbit,
            inclination=orbit.inclination % 360.0,
            raan=orbit.raan % 360.0,
            initial_true_anomaly=orbit.initial_true_anomaly % 360.0,
        )
    if "optical" in doc:
        kw["optical"] = _merge(base.optical, doc["optical"], OPTICAL_FIELDS, "optical")
    if "generation" in doc:
        kw["generation_model"] = _merge(
            base.generation_model, doc["generation"], GENERATION_FIELDS, "generation"
        )
    if "sim" in doc:
        kw.update(_parse_section(doc["sim"], SIM_FIELDS, "sim"))
    if "sdrs" in doc:
        kw["sdrs"] = _build_list(
            doc["sdrs"], SDR_FIELDS, SdrUnit, "id", {x.id: x for x in base.sdrs}, "sdrs"
        )
    if "frontends" in doc:
        kw["frontends"] = _build_list(
            doc["frontends"], FRONTEND_FIELDS, FrontEnd, "id",
            {x.id: x for x in base.frontends}, "frontends",
        )
    if "stations" in doc:
        kw["stations"] = _build_list(
            doc["stations"], STATION_FIELDS, GroundStation, "name",
            {x.name: x for x in base.stations}, "stations",
        )
    if "experiments" in doc:
        kw["experiments"] = _build_list(
            doc["experiments"], EXPERIMENT_FIELDS, ExperimentSpec, "id", {}, "experiments"
        )
    if "links" in doc:
        links_doc = doc["links"]
        if not isinstance(links_doc, dict):
            raise SchemaError("links: expected an object keyed by band")
        links = dict(base.links)
        for band, sub in links_doc.items():
            links[band] = _merge(links.get(band, RfLinkParams()), sub, LINK_FIELDS, f"links.{band}")
        kw["links"] = links

    scenario = replace(base, **kw)
    issues = validate_scenario(scenario)
    dangling = [i for i in issues if i.code == "dangling-frontend"]
    if dangling:
        raise DanglingReferenceError("; ".join(i.message for i in dangling))
    if issues:
        raise SchemaError("; ".join(f"{i.code}: {i.message}" for i in issues), issues)
    return scenario


def load_scenario_file(path) -> Scenario:
    with open(path, "rb") as fh:
        return load_scenario(fh.read())
