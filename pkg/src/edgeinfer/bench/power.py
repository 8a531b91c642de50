"""Power study: sample robot-side and edge-side energy counters while the
pipeline runs under each placement."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ..client import Placement
from ..telemetry import (ActivityEnergyProvider, EnergyProvider,
                         FileEnergyProvider, PowerSampler)
from .pipeline import run_pipeline
from .scenario import Scenario

# calibrated synthetic bands: sustained compute vs. device idle
DEFAULT_BUSY_WATTS = 9.5
DEFAULT_IDLE_WATTS = 0.6


@dataclass
class PowerRow:
    placement: str
    robot_watts: Fraction
    edge_watts: Fraction
    fps: float


@dataclass
class PowerStudyResult:
    rows: list[PowerRow]

    def robot_reduction(self) -> Fraction:
        """Fractional robot-side drop of the remote row vs. the local row."""
        by_kind = {r.placement: r for r in self.rows}
        local, remote = by_kind["local"], by_kind["remote"]
        return 1 - remote.robot_watts / local.robot_watts


class _InverseActivity:
    """Drives the edge-side provider: busy exactly when the robot is idle
    (i.e. while the remote agent computes)."""

    def __init__(self, edge_provider: ActivityEnergyProvider):
        self.edge = edge_provider

    def set_busy(self, busy: bool):
        self.edge.set_busy(not busy)


class _FanoutActivity:
    def __init__(self, *sinks):
        self.sinks = sinks

    def set_busy(self, busy: bool):
        for s in self.sinks:
            s.set_busy(busy)


def power_study(base: Scenario, plan_store: str | Path,
                busy_watts: float = DEFAULT_BUSY_WATTS,
                idle_watts: float = DEFAULT_IDLE_WATTS,
                sample_hz: float = 10.0,
                remote_latency_us: int = 30_000,
                robot_provider_file: str | None = None,
                edge_provider_file: str | None = None) -> PowerStudyResult:
    """Run the scenario under Local and Remote(inproc) placements and report
    average watts per side. File-backed providers override the synthetic
    activity providers when given."""
    rows = []
    for kind in ("local", "remote"):
        if kind == "local":
            placement = Placement(kind="local",
                                  speed_factor=base.placement.speed_factor)
        else:
            placement = Placement(
                kind="remote", transport="inproc", endpoint=str(plan_store),
                shape_latency_us=remote_latency_us,
                remote_speed_factor=base.placement.remote_speed_factor,
            )
        scenario = dataclasses.replace(base, placement=placement)

        robot_synth = ActivityEnergyProvider(busy_watts, idle_watts)
        edge_synth = ActivityEnergyProvider(busy_watts, idle_watts)
        edge_synth.set_busy(False)
        activity = _FanoutActivity(robot_synth, _InverseActivity(edge_synth))

        robot_provider: EnergyProvider = (
            FileEnergyProvider(robot_provider_file) if robot_provider_file
            else robot_synth
        )
        edge_provider: EnergyProvider = (
            FileEnergyProvider(edge_provider_file) if edge_provider_file
            else edge_synth
        )

        with PowerSampler(robot_provider, sample_hz) as robot_sampler, \
                PowerSampler(edge_provider, sample_hz) as edge_sampler:
            report = run_pipeline(scenario, plan_store, activity=activity)

        rows.append(PowerRow(
            placement=kind,
            robot_watts=robot_sampler.average_watts(),
            edge_watts=edge_sampler.average_watts(),
            fps=float(report.summary.fps),
        ))
    return PowerStudyResult(rows)


def power_table(result: PowerStudyResult) -> str:
    lines = [f"{'placement':<10}{'robot_W':>10}{'edge_W':>10}{'fps':>10}"]
    for r in result.rows:
        lines.append(f"{r.placement:<10}{float(r.robot_watts):>10.3f}"
                     f"{float(r.edge_watts):>10.3f}{r.fps:>10.3f}")
    lines.append(f"robot-side reduction: {float(result.robot_reduction()) * 100:.1f}%")
    return "\n".join(lines) + "\n"
