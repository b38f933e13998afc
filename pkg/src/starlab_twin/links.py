"""RF link margins, optical gating, and pass data capacity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

from .errors import ConfigError
from .orbit import GeoSample, PassWindow
from .scenario import OPTICAL, FrontEnd, OpticalTerminal, RfLinkParams

SPEED_OF_LIGHT = 299_792_458.0  # m/s
BOLTZMANN_DB = 228.6  # -10*log10(k), dBW/K/Hz

RANGE = "range"
POINTING = "pointing"
MARGIN = "margin"
BAND_CAP = "band-cap"


@dataclass(frozen=True)
class LinkAssessment:
    """Closure verdict for one band at one geometry sample.

    ``margin`` is in dB for RF links; for optical links it is the slack of
    the tighter range bound in km (negative when out of range).
    ``limiting_factor`` names what bounds the result: the failed check
    when open, ``band-cap`` when closed.
    """

    closed: bool
    margin: float
    achievable_rate: float
    limiting_factor: str


def fspl_db(frequency: float, distance: float) -> float:
    """Free-space path loss in dB for ``frequency`` Hz over ``distance`` km."""
    if not frequency > 0 or not distance > 0:
        raise ValueError("frequency and distance must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance * 1e3 * frequency / SPEED_OF_LIGHT)


def rf_margin(fe: FrontEnd, params: RfLinkParams, slant_range: float) -> float:
    if params.required_cn0 is None:
        raise ConfigError(f"no required C/N0 configured for band {fe.band}")
    tx_gain = fe.antenna_gain if params.tx_gain is None else params.tx_gain
    cn0 = (
        params.tx_power
        + tx_gain
        + params.rx_gain
        - fspl_db(fe.center_frequency, slant_range)
        - params.system_losses
        + params.rx_figure_of_merit
        + BOLTZMANN_DB
    )
    return cn0 - params.required_cn0


def rf_assess(fe: FrontEnd, params: RfLinkParams, slant_range: float) -> LinkAssessment:
    if fe.max_gross_rate is None:
        raise ConfigError(f"front-end {fe.id} has no gross rate defined")
    margin = rf_margin(fe, params, slant_range)
    if margin >= params.required_margin:
        return LinkAssessment(True, margin, fe.max_gross_rate, BAND_CAP)
    return LinkAssessment(False, margin, 0.0, MARGIN)


def optical_assess(
    term: OpticalTerminal,
    slant_range: float,
    pointing_error_3sigma: float,
    direction: Literal["down", "up"] = "down",
) -> LinkAssessment:
    """Hard gate: range window AND pointing requirement, both inclusive."""
    slack = min(slant_range - term.range_min, term.range_max - slant_range)
    if slack < 0:
        return LinkAssessment(False, slack, 0.0, RANGE)
    if pointing_error_3sigma > term.pointing_requirement_3sigma:
        return LinkAssessment(False, slack, 0.0, POINTING)
    rate = term.downlink_max_rate if direction == "down" else term.uplink_max_rate
    return LinkAssessment(True, slack, rate, BAND_CAP)


def pass_capacity(window: PassWindow, assess: Callable[[GeoSample], LinkAssessment]) -> float:
    """Bits deliverable over the window: trapezoid rule on the achievable rate."""
    samples = window.samples
    if len(samples) < 2:
        raise ValueError("pass capacity needs at least two samples")
    rates = [assess(s).achievable_rate for s in samples]
    total = 0.0
    for a, b, ra, rb in zip(samples, samples[1:], rates, rates[1:]):
        total += 0.5 * (ra + rb) * (b.t - a.t)
    return total


def band_assessor(scenario, band: str, direction: str = "down") -> Callable[[GeoSample], LinkAssessment]:
    """Per-sample assessor for a payload band label, the TTC link, or ``optical``."""
    if band == OPTICAL:
        term = scenario.optical
        err = term.pointing_error_3sigma
        return lambda s: optical_assess(term, s.slant_range, err, direction)
    if band == scenario.ttc_frontend().band:
        fe = scenario.ttc_frontend()
    else:
        matches = [fe for fe in scenario.frontends if fe.band == band]
        if not matches:
            raise ConfigError(f"no front-end serves band {band}")
        fe = matches[0]
    try:
        params = scenario.link_params(fe.band)
    except KeyError:
        raise ConfigError(f"no link parameters for band {fe.band}") from None
    return lambda s: rf_assess(fe, params, s.slant_range)


def closed_intervals(window: PassWindow, assess) -> list[tuple[float, float]]:
    """Runs of consecutive closed samples, as (first closed t, last closed t)."""
    runs: list[tuple[float, float]] = []
    start = last = None
    for s in window.samples:
        if assess(s).closed:
            if start is None:
                start = s.t
            last = s.t
        elif start is not None:
            runs.append((start, last))
            start = None
    if start is not None:
        runs.append((start, last))
    return [(a, b) for a, b in runs if b > a]


def link_transitions(samples, assess) -> list[tuple[float, str, LinkAssessment]]:
    """``link-open`` / ``link-close`` at each sample where closure flips.

    The first sample opens the link if it is already closed.
    """
    out = []
    was_closed = False
    for s in samples:
        a = assess(s)
        if a.closed and not was_closed:
            out.append((s.t, "link-open", a))
        elif was_closed and not a.closed:
            out.append((s.t, "link-close", a))
        was_closed = a.closed
    return out
