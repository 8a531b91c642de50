"""`bench` command line: run, replay, crossover, power."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..core import EdgeInferError, ErrorCode
from ..telemetry import summary_table
from .crossover import crossover_table, run_crossover_study
from .pipeline import run_pipeline
from .power import power_study, power_table
from .replay import run_replay
from .report import emit_report, invariants_pass
from .scenario import Scenario, load_scenario


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--plans", default="plans", metavar="DIR")
    p.add_argument("--out", default="bench-out", metavar="DIR")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration-s", type=float, default=None)


def _apply_common(scenario: Scenario, args) -> Scenario:
    if args.seed is not None:
        scenario.seed = args.seed
    if args.duration_s is not None:
        scenario.duration_s = args.duration_s
        scenario.frame_count = 0
    return scenario


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bench", description="inference benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario pipeline")
    p_run.add_argument("--scenario", required=True, metavar="FILE")
    _add_common(p_run)

    p_replay = sub.add_parser("replay", help="verify FPS arithmetic from constants")
    p_replay.add_argument("--inference-us", type=int, required=True)
    p_replay.add_argument("--network-us", type=int, default=0,
                          help="one-way network microseconds")
    p_replay.add_argument("--preprocess-us", type=int, default=0)
    p_replay.add_argument("--postprocess-us", type=int, default=0)
    p_replay.add_argument("--frames", type=int, default=100)

    p_cross = sub.add_parser("crossover", help="local-vs-remote crossover grid")
    p_cross.add_argument("--scenario", required=True, metavar="FILE")
    p_cross.add_argument("--grid", metavar="FILE",
                         help="file with 'edge_speeds = a,b,..' and 'bandwidths_Bps = ...'")
    p_cross.add_argument("--local-speed", type=float, default=0.05)
    p_cross.add_argument("--latency-us", type=int, default=2_000)
    p_cross.add_argument("--frames-per-cell", type=int, default=5)
    _add_common(p_cross)

    p_power = sub.add_parser("power", help="robot/edge power comparison")
    p_power.add_argument("--scenario", required=True, metavar="FILE")
    p_power.add_argument("--robot-provider", metavar="FILE",
                         help="energy counter file for the robot side")
    p_power.add_argument("--edge-provider", metavar="FILE")
    p_power.add_argument("--busy-watts", type=float, default=9.5)
    p_power.add_argument("--idle-watts", type=float, default=0.6)
    p_power.add_argument("--sample-hz", type=float, default=10.0)
    _add_common(p_power)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except EdgeInferError as exc:
        print(f"bench: {exc.code.name}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "replay":
        summary = run_replay(args.inference_us, args.network_us,
                             args.preprocess_us, args.postprocess_us, args.frames)
        print(summary_table(summary), end="")
        return 0

    scenario = _apply_common(load_scenario(args.scenario), args)

    if args.command == "run":
        report = run_pipeline(scenario, args.plans)
        paths = emit_report(report, args.out)
        print(summary_table(report.summary), end="")
        print(f"report written to {paths['summary'].parent}")
        return 0 if invariants_pass(report) else 1

    if args.command == "crossover":
        edge_speeds = [0.02, 0.05, 0.1, 0.25, 1.0]
        bandwidths = [200_000, 1_000_000, 5_000_000, 25_000_000, 0]
        if args.grid:
            edge_speeds, bandwidths = _parse_grid(Path(args.grid).read_text())
        cells = run_crossover_study(scenario, args.plans, args.local_speed,
                                    edge_speeds, bandwidths, args.latency_us,
                                    args.frames_per_cell)
        table = crossover_table(cells)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "crossover.txt").write_text(table)
        print(table, end="")
        return 0 if all(c.agrees for c in cells) else 1

    if args.command == "power":
        result = power_study(scenario, args.plans,
                             busy_watts=args.busy_watts, idle_watts=args.idle_watts,
                             sample_hz=args.sample_hz,
                             robot_provider_file=args.robot_provider,
                             edge_provider_file=args.edge_provider)
        table = power_table(result)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "power.txt").write_text(table)
        print(table, end="")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def _parse_grid(text: str) -> tuple[list[float], list[int]]:
    edge_speeds, bandwidths = None, None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "edge_speeds":
            edge_speeds = [float(v) for v in val.split(",")]
        elif key == "bandwidths_Bps":
            bandwidths = [int(v) for v in val.split(",")]
    if not edge_speeds or not bandwidths:
        raise EdgeInferError(
            ErrorCode.MALFORMED_FRAME, "grid file needs edge_speeds and bandwidths_Bps"
        )
    return edge_speeds, bandwidths


if __name__ == "__main__":
    raise SystemExit(main())
