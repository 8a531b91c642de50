"""Scenario description and its key-value file format."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..client import Placement
from ..core import EdgeInferError, ErrorCode

TASKS = ("classify", "segment", "video")

_KEYS = {
    "name", "model", "task", "frames", "duration_s", "seed", "source",
    "width", "height", "mean", "std", "abort_error_rate",
    "placement", "endpoint", "transport", "speed_factor", "remote_speed_factor",
    "shape.latency_us", "shape.bandwidth_Bps", "timeout_ms",
    "replay.inference_us", "replay.network_oneway_us",
}


@dataclass
class Scenario:
    name: str = "scenario"
    model: str = "tiny-classifier"      # corpus name, plan file stem, or hash hex
    task: str = "classify"
    frame_count: int = 0                # exactly one of frame_count/duration_s
    duration_s: float = 0.0
    seed: int = 0
    source_dir: str = ""                # empty = synthetic seeded generator
    width: int = 1280
    height: int = 720
    mean: float = 0.5
    std: float = 0.5
    abort_error_rate: float = 0.10
    placement: Placement = field(default_factory=Placement)
    replay_inference_us: int = 0
    replay_network_oneway_us: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"unknown task '{self.task}'")
        if (self.frame_count > 0) == (self.duration_s > 0):
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME,
                "scenario needs exactly one of frames / duration_s",
            )


def parse_scenario(text: str) -> Scenario:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME, f"scenario line {lineno}: expected key = value"
            )
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME, f"scenario line {lineno}: unknown key '{key}'"
            )
        values[key] = val

    placement = Placement(
        kind=values.get("placement", "local"),
        speed_factor=float(values.get("speed_factor", "1.0")),
        endpoint=values.get("endpoint", ""),
        transport=values.get("transport", "tcp"),
        shape_latency_us=int(values.get("shape.latency_us", "0")),
        shape_bandwidth_bps=int(values.get("shape.bandwidth_Bps", "0")),
        timeout_ms=int(values.get("timeout_ms", "30000")),
        remote_speed_factor=float(values.get("remote_speed_factor", "1.0")),
    )
    return Scenario(
        name=values.get("name", "scenario"),
        model=values.get("model", "tiny-classifier"),
        task=values.get("task", "classify"),
        frame_count=int(values.get("frames", "0")),
        duration_s=float(values.get("duration_s", "0")) if "duration_s" in values else
        (0.0 if "frames" in values else 60.0),
        seed=int(values.get("seed", "0")),
        source_dir=values.get("source", ""),
        width=int(values.get("width", "1280")),
        height=int(values.get("height", "720")),
        mean=float(values.get("mean", "0.5")),
        std=float(values.get("std", "0.5")),
        abort_error_rate=float(values.get("abort_error_rate", "0.10")),
        placement=placement,
        replay_inference_us=int(values.get("replay.inference_us", "0")),
        replay_network_oneway_us=int(values.get("replay.network_oneway_us", "0")),
    )


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())
