"""Replay mode: verify the measurement arithmetic by injecting fixed stage
durations instead of executing a model."""

from __future__ import annotations

from ..core import EdgeInferError, ErrorCode
from ..telemetry import Collector, LatencyBreakdown, Summary


def run_replay(inference_us: int, network_oneway_us: int = 0,
               preprocess_us: int = 0, postprocess_us: int = 0,
               frame_count: int = 100) -> Summary:
    """Synthesize `frame_count` identical frames from injected constants;
    the network cost enters twice (request and response)."""
    if inference_us <= 0 or frame_count <= 0:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, "replay needs positive constants")
    collector = Collector()
    for _ in range(frame_count):
        b = LatencyBreakdown(
            preprocess_us=preprocess_us,
            network_us=2 * network_oneway_us,
            inference_us=inference_us,
            postprocess_us=postprocess_us,
        )
        b.end_to_end_us = b.stage_sum()
        collector.record_frame(b)
    return collector.summarize()
