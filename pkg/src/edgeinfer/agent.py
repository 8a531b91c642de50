"""Edge-side inference agent: serves plans over the wire protocol.

Connections are handled concurrently; each connection's request stream is
processed strictly in order. One structured log line per request.
"""

from __future__ import annotations

import argparse
import logging
import socketserver
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from . import wire
from .core import EdgeInferError, ErrorCode
from .interp import execute_plan
from .store import PlanStore

log = logging.getLogger("edgeinfer.agent")

BACKEND_PROFILES = {"edge-cpu": 1.0, "edge-gpu": 8.0}


@dataclass
class AgentConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 0
    plan_dir: str = "plans"
    backend: str = "edge-cpu"
    speed_factor: float = 0.0  # 0 = use the backend profile default
    max_message_bytes: int = wire.DEFAULT_MAX_MESSAGE_BYTES
    max_connections: int = 16
    request_timeout_s: float = 30.0

    def resolved_speed_factor(self) -> float:
        if self.speed_factor > 0:
            return self.speed_factor
        return BACKEND_PROFILES.get(self.backend, 1.0)


def handle_infer(store: PlanStore, req: wire.InferRequest,
                 speed_factor: float) -> wire.InferResponse:
    plan = store.get(req.plan_hash)
    report = execute_plan(plan, list(req.inputs), speed_factor)
    outputs = tuple(report.outputs)
    # timed dry-run of the tensor encoding; the real body is built by the
    # caller but is byte-identical, so this measures the serialize cost
    t0 = time.perf_counter_ns()
    for t in outputs:
        wire.encode_tensor(t)
    serialize_us = (time.perf_counter_ns() - t0) // 1000
    return wire.InferResponse(
        outputs,
        wire.ServerTiming(report.total_micros, 0, serialize_us),
    )


def dispatch_frame(store: PlanStore, frame: wire.Frame, speed_factor: float,
                   max_message_bytes: int) -> wire.Frame:
    """Map one request frame to one response frame; errors become Error frames."""
    rid = frame.request_id
    try:
        if frame.msg_type is wire.MsgType.PING:
            return wire.Frame(wire.MsgType.PONG, rid)
        if frame.msg_type is wire.MsgType.LIST_PLANS_REQUEST:
            store.rescan()
            return wire.Frame(wire.MsgType.LIST_PLANS_RESPONSE, rid,
                              wire.encode_plan_list(store.hashes()))
        if frame.msg_type is wire.MsgType.INFER_REQUEST:
            t0 = time.perf_counter_ns()
            req = wire.decode_request(frame.body)
            deserialize_us = (time.perf_counter_ns() - t0) // 1000
            resp = handle_infer(store, req, speed_factor)
            resp = wire.InferResponse(
                resp.outputs,
                wire.ServerTiming(resp.timing.inference_micros, deserialize_us,
                                  resp.timing.serialize_micros),
            )
            body = wire.encode_response(resp)
            if wire.HEADER_LEN + len(body) > max_message_bytes:
                raise EdgeInferError(
                    ErrorCode.MESSAGE_TOO_LARGE, "response exceeds max_message_bytes"
                )
            return wire.Frame(wire.MsgType.INFER_RESPONSE, rid, body)
        raise EdgeInferError(
            ErrorCode.MALFORMED_FRAME, f"unexpected message type {frame.msg_type.name}"
        )
    except EdgeInferError as exc:
        return wire.Frame(wire.MsgType.ERROR, rid, wire.encode_error(exc.code, str(exc)))
    except Exception as exc:  # defensive: agent must not die on a bad request
        return wire.Frame(wire.MsgType.ERROR, rid,
                          wire.encode_error(ErrorCode.BACKEND_FAILURE, repr(exc)))


def make_inproc_handler(store: PlanStore, speed_factor: float = 1.0,
                        max_message_bytes: int = wire.DEFAULT_MAX_MESSAGE_BYTES):
    """Frame-bytes handler for the in-process transport; shares the exact
    dispatch path the TCP server uses."""

    def handler(raw: bytes) -> bytes:
        try:
            frame = wire.decode_frame_bytes(raw, max_message_bytes)
        except EdgeInferError as exc:
            return wire.encode_frame(
                wire.Frame(wire.MsgType.ERROR, 0, wire.encode_error(exc.code, str(exc)))
            )
        return wire.encode_frame(
            dispatch_frame(store, frame, speed_factor, max_message_bytes)
        )

    return handler


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        server: AgentServer = self.server  # type: ignore[assignment]
        if not server.conn_slots.acquire(blocking=False):
            self.request.close()
            return
        try:
            self.request.settimeout(server.config.request_timeout_s)
            while True:
                try:
                    frame = wire.read_frame(self.request, server.config.max_message_bytes)
                except EdgeInferError as exc:
                    if exc.code is ErrorCode.TRANSPORT_FAILURE:
                        return  # peer closed
                    # frame-level garbage: report it, then drop the stream
                    # (framing is lost, the stream is unrecoverable)
                    try:
                        self.request.sendall(wire.encode_frame(wire.Frame(
                            wire.MsgType.ERROR, 0, wire.encode_error(exc.code, str(exc)))))
                    except OSError:
                        pass
                    return
                t0 = time.perf_counter_ns()
                response = dispatch_frame(
                    server.store, frame, server.config.resolved_speed_factor(),
                    server.config.max_message_bytes,
                )
                elapsed_us = (time.perf_counter_ns() - t0) // 1000
                raw = wire.encode_frame(response)
                try:
                    self.request.sendall(raw)
                except OSError:
                    return
                log.info("%d\t%s\t%s\t%d\t%d\t%d\t%s",
                         frame.request_id, frame.msg_type.name,
                         _req_hash(frame), len(frame.body), len(raw) - wire.HEADER_LEN,
                         elapsed_us, response.msg_type.name)
        finally:
            server.conn_slots.release()


def _req_hash(frame: wire.Frame) -> str:
    if frame.msg_type is wire.MsgType.INFER_REQUEST and len(frame.body) >= wire.HASH_BYTES:
        return frame.body[: wire.HASH_BYTES].hex()[:16]
    return "-"


class AgentServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, config: AgentConfig):
        self.config = config
        self.store = PlanStore(config.plan_dir)
        self.conn_slots = threading.Semaphore(config.max_connections)
        super().__init__((config.listen_host, config.listen_port), _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]


def start_agent(config: AgentConfig) -> AgentServer:
    """Start an agent on a background thread; caller owns shutdown()."""
    server = AgentServer(config)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


def agent_serve(config: AgentConfig):
    """Run the agent in the foreground until interrupted."""
    try:
        server = AgentServer(config)
    except (EdgeInferError, OSError) as exc:
        print(f"agent: startup failed: {exc}", file=sys.stderr)
        raise SystemExit(1)
    log.info("listening on %s:%d, %d plan(s) loaded",
             config.listen_host, server.port, len(server.store.hashes()))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()


def main(argv=None):
    parser = argparse.ArgumentParser(prog="agent", description="edge inference agent")
    parser.add_argument("--listen", default="127.0.0.1:7070", metavar="HOST:PORT")
    parser.add_argument("--plans", default="plans", metavar="DIR")
    parser.add_argument("--backend", choices=sorted(BACKEND_PROFILES), default="edge-cpu")
    parser.add_argument("--speed-factor", type=float, default=0.0,
                        help="override the backend profile speed factor")
    parser.add_argument("--max-conns", type=int, default=16)
    parser.add_argument("--max-msg-bytes", type=int, default=wire.DEFAULT_MAX_MESSAGE_BYTES)
    parser.add_argument("--timeout-s", type=float, default=30.0)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s\t%(name)s\t%(message)s")
    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        parser.error(f"bad --listen address '{args.listen}'")
    if not Path(args.plans).is_dir():
        print(f"agent: plan directory '{args.plans}' not found", file=sys.stderr)
        raise SystemExit(1)
    agent_serve(AgentConfig(
        listen_host=host, listen_port=int(port), plan_dir=args.plans,
        backend=args.backend, speed_factor=args.speed_factor,
        max_connections=args.max_conns, max_message_bytes=args.max_msg_bytes,
        request_timeout_s=args.timeout_s,
    ))


if __name__ == "__main__":
    main()
