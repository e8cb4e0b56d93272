"""Command line interface.

Exit codes: 0 success, 2 validation/configuration problems, 3 runtime
failures.  Times on the command line are in seconds; the solvers run on
hours internally.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import builtin, calibration, checks, engine, outputs, scenario, validation
from .errors import CflError, ConfigError, ScenarioError, SchemeError, TwoflowError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3


def _default_out(name: str) -> Path:
    base = os.environ.get("TWOFLOW_OUT", "out")
    return Path(base) / name


def _run_and_write(sc, out_dir: Path, seed=None) -> engine.RunResult:
    t0 = time.perf_counter()
    result = engine.run_scenario(sc)
    wall = time.perf_counter() - t0
    outputs.write_outputs(result, out_dir, seed=seed, wall_time_s=wall)
    return result


def cmd_run(args) -> int:
    path = Path(args.scenario)
    if not path.is_file():
        print(f"error: scenario file not found: {path}", file=sys.stderr)
        return EXIT_INVALID
    try:
        sc = scenario.parse_scenario(path.read_text(encoding="utf-8"))
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    if args.dt_s is not None or args.dx_km is not None:
        roads = tuple(
            replace(r, dx_km=args.dx_km) if args.dx_km is not None else r for r in sc.roads
        )
        sc = replace(sc, roads=roads, dt_s=args.dt_s if args.dt_s is not None else sc.dt_s)
    out_dir = Path(args.out) if args.out else _default_out(sc.name)
    try:
        result = _run_and_write(sc, out_dir, seed=args.seed)
    except (CflError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SchemeError, TwoflowError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {out_dir} ({len(result.times_s)} records)")
    return EXIT_OK


def cmd_demo(args) -> int:
    name = args.name
    if name not in builtin.BUILTIN_NAMES:
        print(
            f"error: unknown demo '{name}' (choose from {', '.join(builtin.BUILTIN_NAMES)})",
            file=sys.stderr,
        )
        return EXIT_INVALID
    sc = builtin.builtin_scenario(name)
    out_dir = Path(args.out) if args.out else _default_out(name)
    try:
        result = _run_and_write(sc, out_dir)
    except (CflError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SchemeError, TwoflowError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    summary = checks.demo_summary(name, result)
    (out_dir / "summary.txt").write_text(summary + "\n", encoding="utf-8")
    print(summary)
    print(f"outputs in {out_dir}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    path = Path(args.data)
    if not path.is_file():
        print(f"error: data file not found: {path}", file=sys.stderr)
        return EXIT_INVALID
    ingest = calibration.ingest_sensors(path.read_text(encoding="utf-8"))
    for warning in ingest.warnings[:10]:
        print(f"warning: {warning}", file=sys.stderr)
    if len(ingest.warnings) > 10:
        print(f"warning: ... {len(ingest.warnings) - 10} more", file=sys.stderr)
    if ingest.errors:
        for err in ingest.errors[:20]:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    try:
        report = calibration.fit_fd(
            ingest.records,
            args.vehicle_class,
            args.lanes,
            vehicle_length_km=args.vehicle_length_km,
            peak_quantile=args.peak_quantile,
        )
        cfg = calibration.config_with_fit(report)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if report.all_freeflow:
        print(
            "warning: no congested samples observed; the fitted capacity is unreliable",
            file=sys.stderr,
        )
    payload = {"fd": cfg.to_dict(), "fit": report.as_dict()}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(
        f"{report.vehicle_class}: v_max {report.v_max_kmh:.1f} km/h, "
        f"capacity {report.peak_flux_veh_h:.0f} veh/h, jam density {report.rho_max_veh_km:.1f} veh/km "
        f"({report.n_samples} samples) -> {out}"
    )
    return EXIT_OK


def cmd_validate(_args) -> int:
    rows = validation.run_all()
    width = max(len(name) for name, _, _ in rows)
    failed = 0
    for name, ok, detail in rows:
        status = "PASS" if ok else "FAIL"
        print(f"{status}  {name.ljust(width)}  {detail}")
        failed += 0 if ok else 1
    return EXIT_OK if failed == 0 else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoflow",
        description="Two-class (cars/trucks) traffic flow simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--out", default=None, help="output directory (default $TWOFLOW_OUT/<name>)")
    p_run.add_argument("--dt-s", type=float, default=None, dest="dt_s", help="override the macro time step")
    p_run.add_argument("--dx-km", type=float, default=None, dest="dx_km", help="override the cell width")
    p_run.add_argument("--seed", type=int, default=None,
                       help="recorded in the manifest; current models are deterministic")
    p_run.set_defaults(func=cmd_run)

    p_demo = sub.add_parser("demo", help="run a built-in scenario")
    p_demo.add_argument("name", help=f"one of: {', '.join(builtin.BUILTIN_NAMES)}")
    p_demo.add_argument("--out", default=None)
    p_demo.set_defaults(func=cmd_demo)

    p_cal = sub.add_parser("calibrate", help="fit fundamental-diagram parameters from sensor data")
    p_cal.add_argument("--data", required=True, help="sensor CSV (timestamp,station_id,lane,class,flux,speed)")
    p_cal.add_argument("--class", required=True, dest="vehicle_class", choices=calibration.CLASSES)
    p_cal.add_argument("--lanes", required=True, type=int)
    p_cal.add_argument("--out", required=True, help="output JSON file")
    p_cal.add_argument("--vehicle-length-km", type=float, default=None, dest="vehicle_length_km")
    p_cal.add_argument("--peak-quantile", type=float, default=0.98, dest="peak_quantile")
    p_cal.set_defaults(func=cmd_calibrate)

    p_val = sub.add_parser("validate", help="run the built-in invariant suite")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except TwoflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
