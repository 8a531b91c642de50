"""Placement-transparent inference client.

A Session hides where execution happens: `infer()` behaves identically for
the local backend and for a remote agent; the choice comes from configuration
(file, flags, or EDGEINFER_* environment overrides), never from code.
"""

from __future__ import annotations

import itertools
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from . import wire
from .agent import make_inproc_handler
from .core import EdgeInferError, ErrorCode, Tensor
from .interp import execute_plan
from .store import PlanStore
from .telemetry import LatencyBreakdown

ENV_PREFIX = "EDGEINFER_"

CONFIG_KEYS = (
    "placement", "endpoint", "transport", "speed_factor",
    "shape.latency_us", "shape.bandwidth_Bps", "plan_store", "timeout_ms",
)

_session_ids = itertools.count(1)
_session_id_lock = threading.Lock()


@dataclass(frozen=True)
class Placement:
    kind: str = "local"               # "local" | "remote"
    speed_factor: float = 1.0         # local backend speed
    endpoint: str = ""                # host:port (tcp) or plan dir (inproc)
    transport: str = "tcp"            # "tcp" | "inproc"
    shape_latency_us: int = 0
    shape_bandwidth_bps: int = 0
    timeout_ms: int = 30_000
    remote_speed_factor: float = 1.0  # backend factor of an inproc agent

    def __post_init__(self):
        if self.kind not in ("local", "remote"):
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad placement '{self.kind}'")
        if self.kind == "remote" and not self.endpoint:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "remote placement needs endpoint")

    @property
    def shaped(self) -> bool:
        return self.shape_latency_us > 0 or self.shape_bandwidth_bps > 0


def parse_config(text: str) -> dict[str, str]:
    """key = value lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME, f"config line {lineno}: expected key = value"
            )
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME, f"config line {lineno}: unknown key '{key}'"
            )
        values[key] = val
    return values


def _env_key(key: str) -> str:
    return ENV_PREFIX + key.upper().replace(".", "_")


def load_placement(config_path: str | Path | None = None,
                   overrides: dict[str, str] | None = None,
                   env: dict[str, str] | None = None) -> tuple[Placement, str]:
    """Resolve placement from file < environment < explicit overrides.
    Returns (placement, plan_store_dir)."""
    values: dict[str, str] = {}
    if config_path is not None:
        values.update(parse_config(Path(config_path).read_text()))
    env = os.environ if env is None else env
    for key in CONFIG_KEYS:
        if _env_key(key) in env:
            values[key] = env[_env_key(key)]
    if overrides:
        values.update(overrides)

    kind = values.get("placement", "local")
    placement = Placement(
        kind=kind,
        speed_factor=float(values.get("speed_factor", "1.0")),
        endpoint=values.get("endpoint", ""),
        transport=values.get("transport", "tcp"),
        shape_latency_us=int(values.get("shape.latency_us", "0")),
        shape_bandwidth_bps=int(values.get("shape.bandwidth_Bps", "0")),
        timeout_ms=int(values.get("timeout_ms", "30000")),
    )
    return placement, values.get("plan_store", "plans")


@dataclass
class InferResult:
    outputs: list[Tensor]
    breakdown: LatencyBreakdown


class Session:
    """One plan, one placement, sequential infer calls."""

    def __init__(self, placement: Placement, plan_hash: bytes, plan_store: str | Path):
        with _session_id_lock:
            self.session_id = next(_session_ids)
        self.placement = placement
        self.plan_hash = plan_hash
        self._closed = False
        self._plan = None
        self._transport: wire.Transport | None = None
        self._request_ids = itertools.count(1)

        if placement.kind == "local":
            self._plan = PlanStore(plan_store).get(plan_hash)
            return

        if placement.transport == "inproc":
            store = PlanStore(placement.endpoint)
            transport: wire.Transport = wire.InProcTransport(
                make_inproc_handler(store, placement.remote_speed_factor)
            )
        elif placement.transport == "tcp":
            host, _, port = placement.endpoint.rpartition(":")
            if not host or not port.isdigit():
                raise EdgeInferError(
                    ErrorCode.TRANSPORT_FAILURE, f"bad endpoint '{placement.endpoint}'"
                )
            transport = wire.TcpTransport(host, int(port),
                                          timeout_s=placement.timeout_ms / 1000.0)
        else:
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME, f"unknown transport '{placement.transport}'"
            )
        if placement.shaped:
            transport = wire.ShapedTransport(
                transport,
                wire.ShapedLink(placement.shape_latency_us, placement.shape_bandwidth_bps),
            )
        self._transport = transport
        try:
            pong = self._exchange(wire.Frame(wire.MsgType.PING, next(self._request_ids)))
            if pong.msg_type is not wire.MsgType.PONG:
                raise EdgeInferError(ErrorCode.TRANSPORT_FAILURE, "agent did not answer ping")
            listed = self._exchange(
                wire.Frame(wire.MsgType.LIST_PLANS_REQUEST, next(self._request_ids))
            )
            hashes = wire.decode_plan_list(listed.body)
            if plan_hash not in hashes:
                raise EdgeInferError(
                    ErrorCode.MODEL_NOT_FOUND,
                    f"agent does not hold plan {plan_hash.hex()[:16]}",
                )
        except EdgeInferError:
            transport.close()
            raise

    def _exchange(self, frame: wire.Frame) -> wire.Frame:
        response = self._transport.roundtrip(frame)
        if response.msg_type is wire.MsgType.ERROR:
            code, message = wire.decode_error(response.body)
            raise EdgeInferError(code, f"agent error: {message}")
        return response

    def infer(self, inputs: list[Tensor]) -> InferResult:
        if self._closed:
            raise EdgeInferError(ErrorCode.TRANSPORT_FAILURE, "session is closed")
        t_start = time.perf_counter_ns()

        if self.placement.kind == "local":
            report = execute_plan(self._plan, inputs, self.placement.speed_factor)
            e2e_us = (time.perf_counter_ns() - t_start) // 1000
            breakdown = LatencyBreakdown(
                inference_us=report.total_micros,
                end_to_end_us=max(e2e_us, report.total_micros),
            )
            return InferResult(report.outputs, breakdown)

        t0 = time.perf_counter_ns()
        body = wire.encode_request(wire.InferRequest(self.plan_hash, tuple(inputs)))
        client_ser_us = (time.perf_counter_ns() - t0) // 1000
        frame = wire.Frame(wire.MsgType.INFER_REQUEST, next(self._request_ids), body)

        t0 = time.perf_counter_ns()
        response = self._exchange(frame)
        roundtrip_us = (time.perf_counter_ns() - t0) // 1000

        t0 = time.perf_counter_ns()
        decoded = wire.decode_response(response.body)
        client_deser_us = (time.perf_counter_ns() - t0) // 1000

        timing = decoded.timing
        server_total = (timing.inference_micros + timing.deserialize_micros
                        + timing.serialize_micros)
        network_us = max(roundtrip_us - server_total, 0)
        e2e_us = (time.perf_counter_ns() - t_start) // 1000
        breakdown = LatencyBreakdown(
            serialize_us=client_ser_us + timing.serialize_micros,
            network_us=network_us,
            inference_us=timing.inference_micros,
            deserialize_us=client_deser_us + timing.deserialize_micros,
            end_to_end_us=e2e_us,
        )
        return InferResult(list(decoded.outputs), breakdown)

    def close(self):
        if self._closed:
            return
        self._closed = True
        if self._transport is not None:
            try:
                self._transport.close()
            except Exception:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def session_open(placement: Placement, plan_hash: bytes,
                 plan_store: str | Path) -> Session:
    return Session(placement, plan_hash, plan_store)
