"""Offloading crossover study: measure Local vs Remote over a grid of edge
speed factors and link bandwidths, and compare the measured winner against
the analytic predicate remote_inference + round_trip < local_inference."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .. import wire
from ..client import Placement
from ..core import tensor_num_bytes
from ..store import PlanStore
from .pipeline import resolve_plan_hash, run_pipeline
from .scenario import Scenario


@dataclass
class CrossoverCell:
    edge_speed_factor: float
    bandwidth_bps: int
    local_fps: float
    remote_fps: float
    measured_winner: str          # "local" | "remote"
    predicted_winner: str
    local_inference_us: float
    predicted_remote_inference_us: float
    predicted_round_trip_us: float
    agrees: bool


def _wire_payload_bytes(specs) -> int:
    # frame header + tensor encodings; the request also carries the plan hash
    total = wire.HEADER_LEN
    for dtype, shape in specs:
        total += 2 + 8 * len(shape) + tensor_num_bytes(dtype, shape)
    return total


def run_crossover_study(base: Scenario, plan_store: str | Path,
                        local_speed: float, edge_speeds: list[float],
                        bandwidths_bps: list[int], latency_us: int = 2_000,
                        frames_per_cell: int = 5) -> list[CrossoverCell]:
    plan_hash = resolve_plan_hash(base.model, plan_store)
    plan = PlanStore(plan_store).get(plan_hash)

    req_bytes = _wire_payload_bytes(plan.input_specs) + wire.HASH_BYTES + 2
    resp_bytes = _wire_payload_bytes(plan.output_specs) + 2 + 24

    # the local side is the shared baseline for every cell, so give it a
    # longer run than the per-cell remote measurements
    local_scenario = dataclasses.replace(
        base, frame_count=3 * frames_per_cell, duration_s=0.0,
        placement=Placement(kind="local", speed_factor=local_speed),
    )
    local_report = run_pipeline(local_scenario, plan_store)
    local_fps = float(local_report.summary.fps)
    local_inf_us = local_report.summary.stages["inference_us"].mean_us

    cells = []
    for edge_sf in edge_speeds:
        for bw in bandwidths_bps:
            link = wire.ShapedLink(latency_us, bw)
            remote_scenario = dataclasses.replace(
                base, frame_count=frames_per_cell, duration_s=0.0,
                placement=Placement(
                    kind="remote", transport="inproc", endpoint=str(plan_store),
                    shape_latency_us=latency_us, shape_bandwidth_bps=bw,
                    remote_speed_factor=edge_sf,
                ),
            )
            remote_report = run_pipeline(remote_scenario, plan_store)
            remote_fps = float(remote_report.summary.fps)

            # predicate inputs: measured per-stage means (network includes
            # the calibrated link delays); the analytic round trip is kept
            # in the row for reference
            remote_inf = remote_report.summary.stages["inference_us"].mean_us
            remote_net = remote_report.summary.stages["network_us"].mean_us
            round_trip = (wire.shaped_delay_micros(link, req_bytes)
                          + wire.shaped_delay_micros(link, resp_bytes))
            predicted = ("remote" if remote_inf + remote_net < local_inf_us
                         else "local")
            measured = "remote" if remote_fps > local_fps else "local"
            cells.append(CrossoverCell(
                edge_speed_factor=edge_sf, bandwidth_bps=bw,
                local_fps=local_fps, remote_fps=remote_fps,
                measured_winner=measured, predicted_winner=predicted,
                local_inference_us=local_inf_us,
                predicted_remote_inference_us=remote_inf + remote_net,
                predicted_round_trip_us=round_trip,
                agrees=measured == predicted,
            ))
    return cells


def crossover_table(cells: list[CrossoverCell]) -> str:
    lines = [f"{'edge_sf':>8}{'bw_Bps':>12}{'local_fps':>11}{'remote_fps':>11}"
             f"{'measured':>10}{'predicted':>10}{'agree':>7}"]
    for c in cells:
        lines.append(
            f"{c.edge_speed_factor:>8.3g}{c.bandwidth_bps:>12}{c.local_fps:>11.3f}"
            f"{c.remote_fps:>11.3f}{c.measured_winner:>10}{c.predicted_winner:>10}"
            f"{'yes' if c.agrees else 'NO':>7}"
        )
    agree = sum(c.agrees for c in cells)
    lines.append(f"agreement: {agree}/{len(cells)}")
    return "\n".join(lines) + "\n"
