"""Command-line front end.

Exit codes: 0 success, 1 domain failure (violations, skipped requests,
open link), 2 usage or configuration error. Machine-readable output goes
to ``--out``; human summaries go to standard output.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, ScenarioError, ScheduleRejected, UnsupportedFormat
from .links import fspl_db, optical_assess, rf_assess, rf_margin
from .orbit import find_passes, orbital_period
from .payload import flatsat_check
from .scenario import TTC, RfLinkParams, default_scenario, load_scenario_file, validate_scenario
from .scheduler import (
    duty_cycle,
    plan_greedy,
    schedule_from_dict,
    schedule_to_dict,
    validate,
)
from .sim import emit_report, run

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

BAND_CHOICES = {"uhf": "UHF", "s": "L/S", "x": "X", "ka": "Ka", "ttc": TTC}


class UsageError(Exception):
    pass


def _scenario(args, path=None):
    path = path or (args.scenario[0] if args.scenario else None)
    s = default_scenario() if path is None else load_scenario_file(path)
    if args.seed is not None:
        s = replace(s, seed=args.seed)
    return s


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def cmd_passes(args) -> int:
    s = _scenario(args)
    stations = list(s.stations)
    if args.station:
        stations = [st for st in stations if st.name == args.station]
        if not stations:
            raise UsageError(f"unknown station {args.station!r}")
    horizon = args.hours * 3600.0
    rows = []
    for st in stations:
        for w in find_passes(s.orbit, st, 0.0, horizon, s.time_step) if horizon > 0 else []:
            rows.append(
                {
                    "station": w.station,
                    "start_s": w.t_start,
                    "end_s": w.t_end,
                    "duration_s": w.duration,
                    "max_elevation_deg": w.max_elevation,
                    "min_slant_range_km": w.min_slant_range,
                }
            )
    rows.sort(key=lambda r: (r["start_s"], r["station"]))
    print(f"{'station':<12} {'start_s':>10} {'end_s':>10} {'dur_s':>7} {'max_el':>7} {'min_km':>8}")
    for r in rows:
        print(
            f"{r['station']:<12} {r['start_s']:>10.1f} {r['end_s']:>10.1f} {r['duration_s']:>7.1f} "
            f"{r['max_elevation_deg']:>7.2f} {r['min_slant_range_km']:>8.1f}"
        )
    print(f"{len(rows)} pass(es) in {args.hours:g} h")
    _write(args.out, json.dumps({"passes": rows}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_linkbudget(args) -> int:
    s = _scenario(args)
    band = args.band
    result: dict = {"band": band, "range_km": args.range_km}
    if band.startswith("optical"):
        direction = band.split("-")[1]
        pointing = s.optical.pointing_error_3sigma if args.pointing_deg is None else args.pointing_deg
        a = optical_assess(s.optical, args.range_km, pointing, direction)
        o = s.optical
        in_range = o.range_min <= args.range_km <= o.range_max
        print(f"range check    {o.range_min:g} <= {args.range_km:g} <= {o.range_max:g} km: {'ok' if in_range else 'FAIL'}")
        ok_point = pointing <= o.pointing_requirement_3sigma
        print(f"pointing check {pointing:g} <= {o.pointing_requirement_3sigma:g} deg (3 sigma): {'ok' if ok_point else 'FAIL'}")
        result.update(pointing_deg=pointing)
    else:
        label = BAND_CHOICES[band]
        fe = s.ttc_frontend() if label == TTC else next(f for f in s.frontends if f.band == label)
        p = s.links.get(label, RfLinkParams())
        overrides = {
            "tx_power": args.tx_power_dbw,
            "tx_gain": args.tx_gain_dbi,
            "rx_gain": args.rx_gain_dbi,
            "system_losses": args.losses_db,
            "required_margin": args.margin_db,
            "rx_figure_of_merit": args.gt_dbk,
            "required_cn0": args.cn0_dbhz,
        }
        p = replace(p, **{k: v for k, v in overrides.items() if v is not None})
        loss = fspl_db(fe.center_frequency, args.range_km)
        a = rf_assess(fe, p, args.range_km)
        print(f"front-end      {fe.id} ({fe.band}) at {fe.center_frequency / 1e6:.3f} MHz")
        print(f"FSPL           {loss:.2f} dB")
        print(f"margin         {rf_margin(fe, p, args.range_km):.2f} dB (required {p.required_margin:g} dB)")
        result.update(frequency_hz=fe.center_frequency, fspl_db=loss)
    print(f"closed         {'yes' if a.closed else 'no'} (limiting factor: {a.limiting_factor})")
    print(f"rate           {a.achievable_rate / 1e6:.3f} Mbit/s")
    result.update(
        closed=a.closed, margin=a.margin, achievable_rate_bps=a.achievable_rate, limiting_factor=a.limiting_factor
    )
    _write(args.out, json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if a.closed else EXIT_DOMAIN


def _plan(s):
    from .orbit import all_passes

    passes = all_passes(s)
    return plan_greedy(s.experiments, passes, s), passes


def cmd_schedule(args) -> int:
    s = _scenario(args)
    failed = False
    for exp in s.experiments:
        for f in flatsat_check(exp, s):
            print(f"flatsat {exp.id}: {f.code}: {f.message}")
            failed = True
    sched, passes = _plan(s)
    period = orbital_period(s.orbit.altitude)
    per_orbit, dmin = duty_cycle(sched, period, s.sim_duration)
    n_exp = len(sched.experiments)
    print(f"placed {n_exp} experiment(s), {len(sched.downlinks)} downlink session(s), skipped {len(sched.skipped)}")
    for exp_id, reason in sched.skipped:
        print(f"  skipped {exp_id}: {reason}")
    print("duty cycle per orbit: " + " ".join(f"{d:.4f}" for d in per_orbit))
    print(f"min duty cycle {dmin:.4f} (floor {s.platform.duty_cycle_floor:g})")
    _write(args.out, json.dumps(schedule_to_dict(sched), indent=2, sort_keys=True) + "\n")
    violations = validate(sched, s, passes)
    for v in violations:
        print(f"violation {v.code} at {v.t:.1f} s: {v.detail}")
    if failed or sched.skipped or violations:
        return EXIT_DOMAIN
    return EXIT_OK


def _simulate_one(path, schedule_path, fmt, out_dir, force, seed) -> tuple[int, str]:
    ns = argparse.Namespace(scenario=[path] if path else None, seed=seed)
    s = _scenario(ns, path)
    if schedule_path:
        sched = schedule_from_dict(json.loads(Path(schedule_path).read_text()))
        passes = None
    else:
        sched, passes = _plan(s)
    try:
        report = run(s, sched, force=force, passes=passes)
    except ScheduleRejected as exc:
        lines = [str(exc)] + [f"  {v.code} at {v.t:.1f} s: {v.detail}" for v in exc.violations]
        return EXIT_DOMAIN, "\n".join(lines)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = emit_report(report, fmt)
    if fmt == "json":
        (out / "report.json").write_bytes(payload)
    else:
        for name, data in payload.items():
            (out / name).write_bytes(data)
    runtime = [e for e in report.events if e.kind == "violation"]
    summary = (
        f"{path or 'default scenario'}: {len(report.pass_volumes)} pass volume(s), "
        f"produced {report.produced_bits} bits, downlinked {report.downlinked_bits}, "
        f"dropped {report.dropped_bits}, remaining {report.remaining_bits}; "
        f"min duty {report.duty_min:.4f}; violations {len(report.violations)}"
    )
    return (EXIT_DOMAIN if report.violations or runtime else EXIT_OK), summary


def cmd_simulate(args) -> int:
    if args.format not in ("json", "csv"):
        raise UnsupportedFormat(f"unsupported report format: {args.format}")
    out = args.out or "."
    paths = args.scenario or [None]
    if len(paths) == 1:
        jobs = [(paths[0], args.schedule, args.format, out, args.force, args.seed)]
    else:
        if args.schedule:
            raise UsageError("--schedule applies to a single scenario")
        jobs = [
            (p, None, args.format, str(Path(out) / Path(p).stem), args.force, args.seed) for p in paths
        ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_one, *zip(*jobs)))
    else:
        results = [_simulate_one(*j) for j in jobs]
    for _, text in results:
        print(text)
    return max(code for code, _ in results)


def cmd_validate(args) -> int:
    s = _scenario(args)
    issues = validate_scenario(s)
    for i in issues:
        print(f"issue {i.code}: {i.message}")
    if issues:
        return EXIT_USAGE
    print("scenario ok")
    if args.schedule:
        from .orbit import all_passes

        sched = schedule_from_dict(json.loads(Path(args.schedule).read_text()))
        violations = validate(sched, s, all_passes(s))
        for v in violations:
            print(f"violation {v.code} at {v.t:.1f} s: {v.detail}")
        _write(args.out, json.dumps({"violations": [v.__dict__ for v in violations]}, indent=2) + "\n")
        if violations:
            return EXIT_DOMAIN
        print("schedule ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", action="append", help="scenario JSON (default: built-in baseline)")
    common.add_argument("--out", help="machine-readable output file or directory")
    common.add_argument("--format", default="json", help="report format: json or csv")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--force", action="store_true", help="simulate despite schedule violations")
    common.add_argument("--jobs", type=int, default=1, help="parallel scenario runs")

    parser = argparse.ArgumentParser(prog="starlab-twin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("passes", parents=[common], help="predict ground-station passes")
    p.add_argument("--hours", type=float, default=24.0)
    p.add_argument("--station")
    p.set_defaults(func=cmd_passes)

    p = sub.add_parser("linkbudget", parents=[common], help="assess one link at a given range")
    p.add_argument("--band", required=True, choices=[*BAND_CHOICES, "optical-down", "optical-up"])
    p.add_argument("--range-km", type=float, required=True)
    p.add_argument("--pointing-deg", type=float)
    p.add_argument("--tx-power-dbw", type=float)
    p.add_argument("--tx-gain-dbi", type=float)
    p.add_argument("--rx-gain-dbi", type=float)
    p.add_argument("--losses-db", type=float)
    p.add_argument("--margin-db", type=float)
    p.add_argument("--gt-dbk", type=float)
    p.add_argument("--cn0-dbhz", type=float)
    p.set_defaults(func=cmd_linkbudget)

    p = sub.add_parser("schedule", parents=[common], help="plan experiments and downlinks")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", parents=[common], help="run the simulator and write a report")
    p.add_argument("--schedule", help="schedule JSON (default: plan automatically)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", parents=[common], help="check a scenario (and optionally a schedule)")
    p.add_argument("--schedule")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ScenarioError, ConfigError, UnsupportedFormat, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
