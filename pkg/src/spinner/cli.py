"""Command-line entry point: ``spinner <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 numerical abort.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import fov
from .config import ConfigError, apply_overrides, build_scenario, load_config, merge
from .logs import metrics_row, report_table, write_log, write_metrics
from .sim import run
from .vehicle import PLATE_YAW_RATES

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORT = 2

DEFAULT_WAYPOINTS = "waypoints_63m.txt"

MILD_NOISE_CFG = {"position": 0.005, "velocity": 0.01, "attitude": 0.005, "rate": 0.02}


def default_config(command: str) -> dict:
    if command == "hover":
        return {"reference": {"kind": "hover"}, "scenario": {"duration": 10.0}}
    if command == "lemniscate":
        return {"reference": {"kind": "lemniscate", "loops": 2}, "noise": dict(MILD_NOISE_CFG)}
    if command == "gust":
        return {"reference": {"kind": "hover"}, "scenario": {"duration": 25.0},
                "wind": {"speed": 4.8, "t_on": 5.0, "direction": [1.0, 0.0, 0.0]}}
    if command == "plate-sweep":
        return {"reference": {"kind": "hover"}, "scenario": {"duration": 10.0, "initial_yaw_rate": 0.0}}
    if command == "waypoints":
        path = resources.files("spinner") / "data" / DEFAULT_WAYPOINTS
        return {"reference": {"kind": "waypoints", "file": str(path), "segment_speed": 63.0 / 125.0}}
    return {}


def _config(args) -> dict:
    cfg = default_config(args.command)
    if getattr(args, "config", None):
        cfg = merge(cfg, load_config(args.config))
    return apply_overrides(cfg, args.overrides)


def _summary(log, row) -> str:
    return (f"{log.scenario}: e_t={float(row['e_t[m]']):.4f} m  e_pe={float(row['e_pe[m]']):.4f} m  "
            f"spin={float(row['spin_rate[rad/s]']):.3f} rad/s  solve={float(row['solve_mean[ms]']):.2f} ms")


def _run_many(command: str, cfgs: list[tuple[str, dict]], out: Path) -> int:
    rows = []
    status = EXIT_OK
    for name, cfg in cfgs:
        scenario = build_scenario(cfg, name)
        log = run(scenario)
        write_log(log, out / f"{name}_log.csv")
        row = metrics_row(log, scenario.metric_window)
        rows.append(row)
        print(_summary(log, row))
        if log.aborted:
            print(f"{name}: aborted, {log.diagnostic}", file=sys.stderr)
            status = EXIT_ABORT
    write_metrics(rows, out / f"{command}_metrics.csv")
    return status


def cmd_scenario(args) -> int:
    base = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = args.seeds if args.seeds else [base.get("scenario", {}).get("seed", args.seed)]
    cfgs = []
    if args.command == "plate-sweep":
        for width in sorted(PLATE_YAW_RATES):
            cfg = merge(base, {"scenario": {"plate_width": width, "seed": seeds[0]}})
            cfgs.append((f"plate-sweep_{width}mm", cfg))
    else:
        for seed in seeds:
            name = args.command if len(seeds) == 1 else f"{args.command}_seed{seed}"
            cfgs.append((name, merge(base, {"scenario": {"seed": seed}})))
    return _run_many(args.command, cfgs, out)


def cmd_fov(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["mount,native_vertical[deg],tilt[deg],swept_vertical[deg],swept_horizontal[deg]"]
    for tilt in (15.0, 40.0):
        m = fov.SensorMount(59.0, tilt)
        lines.append(f"tilt{tilt:g},{m.native_vertical_fov:g},{tilt:g},{fov.swept_vertical_fov(m):g},"
                     f"{fov.swept_horizontal_fov(m, 1.0):g}")
    lines.append("")
    lines.append("plate[mm],spin_rate[rad/s],revisit_period[s]")
    for width, rate in sorted(PLATE_YAW_RATES.items()):
        lines.append(f"{width},{rate:g},{fov.revisit_period(rate):.4f}")
    text = "\n".join(lines) + "\n"
    (out / "fov-report.csv").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        print(report_table(args.files))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinner", description="Self-rotating tri-rotor flight simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("hover", "hold position, spin at the plate equilibrium"),
                            ("lemniscate", "figure-eight tracking, two loops"),
                            ("gust", "step wind gust while hovering"),
                            ("plate-sweep", "spin-up with the 20/30/40 mm plates"),
                            ("waypoints", "minimum-jerk waypoint route")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", help="TOML config file")
        p.add_argument("-o", "--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=0, help="sensor/wind noise seed")
        p.add_argument("--seeds", type=int, nargs="+", help="run once per seed")
        p.add_argument("-s", "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted override, e.g. nmpc.horizon_steps=30 (repeatable)")
        p.set_defaults(func=cmd_scenario)
    p = sub.add_parser("fov-report", help="swept field-of-view table")
    p.add_argument("-o", "--out", default="out")
    p.set_defaults(func=cmd_fov)
    p = sub.add_parser("report", help="aggregate metrics CSV files into a table")
    p.add_argument("files", nargs="*")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        if args.command == "report":
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        raise


if __name__ == "__main__":
    sys.exit(main())
