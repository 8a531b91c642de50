"""The sequential frame pipeline: acquire, preprocess, infer, postprocess,
publish. One placement-agnostic infer call site serves every configuration."""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..client import Placement, session_open
from ..core import EdgeInferError, ErrorCode, Tensor
from ..plan import deserialize_plan
from ..store import PLAN_SUFFIX
from ..telemetry import Collector, LatencyBreakdown, Summary
from .frames import DirectoryFrames, SyntheticFrames, postprocess, preprocess
from .scenario import Scenario


def resolve_plan_hash(ref: str, store_dir: str | Path) -> bytes:
    """A plan reference is either a 64-char hash or a plan file stem."""
    if len(ref) == 64 and all(c in "0123456789abcdef" for c in ref.lower()):
        return bytes.fromhex(ref)
    path = Path(store_dir) / f"{ref}{PLAN_SUFFIX}"
    if not path.is_file():
        raise EdgeInferError(
            ErrorCode.MODEL_NOT_FOUND, f"no plan '{ref}' in store '{store_dir}'"
        )
    return deserialize_plan(path.read_bytes()).plan_hash


class _NullActivity:
    def set_busy(self, busy: bool):
        pass


@dataclass
class BenchReport:
    scenario: Scenario
    summary: Summary
    frames: list[LatencyBreakdown]
    accounting_ok: bool
    equivalence_digest: str
    results: list[str]
    error_count: int = 0
    acquire_publish_sequential: bool = True


@dataclass
class _FrameLog:
    lines: list[str] = field(default_factory=list)

    def publish(self, line: str):
        self.lines.append(line)


def run_pipeline(scenario: Scenario, plan_store: str | Path,
                 activity=None, epsilon_us: int = 2_000) -> BenchReport:
    """Strictly sequential per-frame loop; every stage timed into the
    breakdown. `activity` (optional) receives busy/idle transitions for
    power accounting."""
    activity = activity or _NullActivity()
    plan_hash = resolve_plan_hash(scenario.model, plan_store)
    if scenario.source_dir:
        source = DirectoryFrames(scenario.source_dir, scenario.width, scenario.height)
    else:
        source = SyntheticFrames(scenario.seed, scenario.width, scenario.height)

    collector = Collector()
    digest = hashlib.sha256()
    log = _FrameLog()
    errors = 0
    sequential = True
    last_publish_ns = 0
    remote = scenario.placement.kind == "remote"

    # the open handshake is mostly link wait on a remote placement
    activity.set_busy(not remote)
    session = session_open(scenario.placement, plan_hash, plan_store)
    activity.set_busy(True)
    input_shape = None
    try:
        deadline = time.monotonic() + scenario.duration_s if scenario.duration_s else None
        frame_idx = 0
        while True:
            if deadline is not None:
                if time.monotonic() >= deadline:
                    break
            elif frame_idx >= scenario.frame_count:
                break

            t_frame = time.perf_counter_ns()
            if last_publish_ns and t_frame < last_publish_ns:
                sequential = False

            t0 = time.perf_counter_ns()
            raw = source.next_frame()
            acquire_us = (time.perf_counter_ns() - t0) // 1000

            try:
                t0 = time.perf_counter_ns()
                if input_shape is None:
                    input_shape = _session_input_shape(session, plan_store, plan_hash)
                x = preprocess(raw, input_shape, scenario.mean, scenario.std)
                tensor = Tensor.from_numpy(x)
                preprocess_us = (time.perf_counter_ns() - t0) // 1000

                if remote:
                    activity.set_busy(False)
                result = session.infer([tensor])  # the single infer call site
                if remote:
                    activity.set_busy(True)

                t0 = time.perf_counter_ns()
                out = result.outputs[0].to_numpy()
                label = postprocess(scenario.task, out)
                postprocess_us = (time.perf_counter_ns() - t0) // 1000

                t0 = time.perf_counter_ns()
                for t in result.outputs:
                    digest.update(t.data)
                log.publish(f"{frame_idx}\t{_result_repr(scenario.task, label)}")
                publish_us = (time.perf_counter_ns() - t0) // 1000
            except EdgeInferError as exc:
                errors += 1
                log.publish(f"{frame_idx}\tERROR\t{exc.code.name}")
                frame_idx += 1
                done = frame_idx if deadline is None else max(frame_idx, 1)
                if errors / max(done, 1) > scenario.abort_error_rate:
                    raise EdgeInferError(
                        exc.code,
                        f"aborting: {errors}/{done} frames failed (last: {exc})",
                    )
                continue

            end_to_end_us = (time.perf_counter_ns() - t_frame) // 1000
            b = result.breakdown
            breakdown = LatencyBreakdown(
                acquire_us=acquire_us,
                preprocess_us=preprocess_us,
                serialize_us=b.serialize_us,
                network_us=b.network_us,
                inference_us=b.inference_us,
                deserialize_us=b.deserialize_us,
                postprocess_us=postprocess_us,
                publish_us=publish_us,
                end_to_end_us=max(end_to_end_us, b.end_to_end_us),
            )
            collector.record_frame(breakdown)
            last_publish_ns = time.perf_counter_ns()
            frame_idx += 1
    finally:
        session.close()
        activity.set_busy(False)

    if not collector.frames:
        raise EdgeInferError(ErrorCode.BACKEND_FAILURE, "no frames completed")
    accounting = all(f.accounting_ok(epsilon_us) for f in collector.frames)
    return BenchReport(
        scenario=scenario,
        summary=collector.summarize(),
        frames=collector.frames,
        accounting_ok=accounting,
        equivalence_digest=digest.hexdigest(),
        results=log.lines,
        error_count=errors,
        acquire_publish_sequential=sequential,
    )


def _session_input_shape(session, plan_store, plan_hash) -> tuple[int, ...]:
    from ..store import PlanStore

    return PlanStore(plan_store).get(plan_hash).input_specs[0][1]


def _result_repr(task: str, label: np.ndarray) -> str:
    if task in ("classify", "video"):
        return f"class={int(label.ravel()[0])}"
    return "mask_sha256=" + hashlib.sha256(np.ascontiguousarray(label).tobytes()).hexdigest()[:16]
