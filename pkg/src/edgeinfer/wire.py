"""Bit-exact wire framing, tensor serialization, and transports.

Frame layout (little-endian):

    magic 'GOWP' (4) | version u16 | msg_type u8 | request_id u64 | body_len u32 | body

Tensor encoding inside bodies: dtype u8, ndim u8, dims u64 each, raw payload.
"""

from __future__ import annotations

import enum
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from .core import DType, EdgeInferError, ErrorCode, Tensor, tensor_num_bytes

MAGIC = b"GOWP"
PROTOCOL_VERSION = 1
HEADER_LEN = 19
HEADER_FMT = "<4sHBQI"
DEFAULT_MAX_MESSAGE_BYTES = 64 * 1024 * 1024
DEFAULT_TIMEOUT_S = 30.0
HASH_BYTES = 32


class MsgType(enum.Enum):
    INFER_REQUEST = 1
    INFER_RESPONSE = 2
    ERROR = 3
    PING = 4
    PONG = 5
    LIST_PLANS_REQUEST = 6
    LIST_PLANS_RESPONSE = 7


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    request_id: int
    body: bytes = b""


def encode_frame(f: Frame) -> bytes:
    return struct.pack(HEADER_FMT, MAGIC, PROTOCOL_VERSION, f.msg_type.value,
                       f.request_id, len(f.body)) + f.body


def _parse_header(header: bytes, max_message_bytes: int):
    magic, version, msg_type, request_id, body_len = struct.unpack(HEADER_FMT, header)
    if magic != MAGIC:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise EdgeInferError(
            ErrorCode.PROTOCOL_VERSION_MISMATCH, f"protocol version {version}"
        )
    try:
        mt = MsgType(msg_type)
    except ValueError:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad msg_type {msg_type}")
    if body_len > max_message_bytes:
        raise EdgeInferError(
            ErrorCode.MESSAGE_TOO_LARGE, f"body of {body_len} bytes exceeds limit"
        )
    return mt, request_id, body_len


def decode_frame_bytes(data: bytes,
                       max_message_bytes: int = DEFAULT_MAX_MESSAGE_BYTES) -> Frame:
    """Decode one frame from a complete byte buffer."""
    if len(data) < HEADER_LEN:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "truncated frame header")
    mt, request_id, body_len = _parse_header(data[:HEADER_LEN], max_message_bytes)
    if len(data) != HEADER_LEN + body_len:
        raise EdgeInferError(
            ErrorCode.MALFORMED_FRAME,
            f"frame length {len(data)} != header+body {HEADER_LEN + body_len}",
        )
    return Frame(mt, request_id, data[HEADER_LEN:])


def read_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        try:
            chunk = sock.recv(remaining)
        except socket.timeout:
            raise EdgeInferError(ErrorCode.TIMEOUT, "socket read timed out")
        except OSError as exc:
            raise EdgeInferError(ErrorCode.TRANSPORT_FAILURE, f"socket read failed: {exc}")
        if not chunk:
            raise EdgeInferError(ErrorCode.TRANSPORT_FAILURE, "connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket,
               max_message_bytes: int = DEFAULT_MAX_MESSAGE_BYTES) -> Frame:
    """Read one frame from a socket; the body_len bound is checked before
    the body is read, so a hostile header cannot force a huge allocation."""
    header = read_exact(sock, HEADER_LEN)
    mt, request_id, body_len = _parse_header(header, max_message_bytes)
    body = read_exact(sock, body_len) if body_len else b""
    return Frame(mt, request_id, body)


# ---------------------------------------------------------------------------
# tensor and message body codecs

class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "truncated message body")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def done(self):
        if self.pos != len(self.buf):
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME, f"{len(self.buf) - self.pos} trailing bytes"
            )


def encode_tensor(t: Tensor) -> bytes:
    return (struct.pack("<BB", t.dtype.value, len(t.shape))
            + b"".join(struct.pack("<Q", d) for d in t.shape) + t.data)


def decode_tensor(c: _Cursor) -> Tensor:
    code, ndim = c.unpack("<BB")
    try:
        dtype = DType(code)
    except ValueError:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad tensor dtype code {code}")
    if not 1 <= ndim <= 5:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad tensor ndim {ndim}")
    shape = tuple(c.unpack("<Q")[0] for _ in range(ndim))
    if any(d < 1 for d in shape):
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad tensor shape {shape}")
    n = tensor_num_bytes(dtype, shape)
    return Tensor(dtype, shape, bytes(c.take(n)))


@dataclass(frozen=True)
class InferRequest:
    plan_hash: bytes
    inputs: tuple[Tensor, ...]


def encode_request(r: InferRequest) -> bytes:
    if len(r.plan_hash) != HASH_BYTES:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "plan hash must be 32 bytes")
    return (r.plan_hash + struct.pack("<H", len(r.inputs))
            + b"".join(encode_tensor(t) for t in r.inputs))


def decode_request(body: bytes) -> InferRequest:
    c = _Cursor(body)
    plan_hash = bytes(c.take(HASH_BYTES))
    (count,) = c.unpack("<H")
    tensors = tuple(decode_tensor(c) for _ in range(count))
    c.done()
    return InferRequest(plan_hash, tensors)


@dataclass(frozen=True)
class ServerTiming:
    inference_micros: int
    deserialize_micros: int
    serialize_micros: int


@dataclass(frozen=True)
class InferResponse:
    outputs: tuple[Tensor, ...]
    timing: ServerTiming


def encode_response(r: InferResponse) -> bytes:
    return (struct.pack("<H", len(r.outputs))
            + b"".join(encode_tensor(t) for t in r.outputs)
            + struct.pack("<QQQ", r.timing.inference_micros,
                          r.timing.deserialize_micros, r.timing.serialize_micros))


def decode_response(body: bytes) -> InferResponse:
    c = _Cursor(body)
    (count,) = c.unpack("<H")
    tensors = tuple(decode_tensor(c) for _ in range(count))
    inf, deser, ser = c.unpack("<QQQ")
    c.done()
    return InferResponse(tensors, ServerTiming(inf, deser, ser))


def encode_error(code: ErrorCode, message: str) -> bytes:
    return struct.pack("<H", code.value) + message.encode("utf-8")


def decode_error(body: bytes) -> tuple[ErrorCode, str]:
    if len(body) < 2:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "truncated error body")
    (code_val,) = struct.unpack("<H", body[:2])
    try:
        code = ErrorCode(code_val)
    except ValueError:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad error code {code_val}")
    return code, body[2:].decode("utf-8", errors="replace")


def encode_plan_list(hashes: list[bytes]) -> bytes:
    return struct.pack("<H", len(hashes)) + b"".join(hashes)


def decode_plan_list(body: bytes) -> list[bytes]:
    c = _Cursor(body)
    (count,) = c.unpack("<H")
    hashes = [bytes(c.take(HASH_BYTES)) for _ in range(count)]
    c.done()
    return hashes


# ---------------------------------------------------------------------------
# network shaping

@dataclass(frozen=True)
class ShapedLink:
    one_way_latency_micros: int = 0
    bandwidth_bytes_per_sec: int = 0  # 0 means unlimited


def shaped_delay_micros(link: ShapedLink, num_bytes: int) -> int:
    """One-way delivery delay: latency plus ceil(bytes/bandwidth), in µs."""
    delay = link.one_way_latency_micros
    bw = link.bandwidth_bytes_per_sec
    if bw:
        delay += (num_bytes * 1_000_000 + bw - 1) // bw
    return delay


# ---------------------------------------------------------------------------
# transports: one logical conversation each, single round trip per call

class Transport:
    def roundtrip(self, frame: Frame) -> Frame:
        raise NotImplementedError

    def close(self):
        pass


class InProcTransport(Transport):
    """Loopback transport over an in-process handler function. Stands in for
    the hypervisor-socket path: same framing, no network."""

    def __init__(self, handler):
        self._handler = handler
        self._closed = False

    def roundtrip(self, frame: Frame) -> Frame:
        if self._closed:
            raise EdgeInferError(ErrorCode.TRANSPORT_FAILURE, "transport closed")
        raw = self._handler(encode_frame(frame))
        return decode_frame_bytes(raw)

    def close(self):
        self._closed = True


class TcpTransport(Transport):
    def __init__(self, host: str, port: int, timeout_s: float = DEFAULT_TIMEOUT_S,
                 max_message_bytes: int = DEFAULT_MAX_MESSAGE_BYTES):
        self._max = max_message_bytes
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout_s)
            self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except socket.timeout:
            raise EdgeInferError(ErrorCode.TIMEOUT, f"connect to {host}:{port} timed out")
        except OSError as exc:
            raise EdgeInferError(
                ErrorCode.TRANSPORT_FAILURE, f"cannot connect to {host}:{port}: {exc}"
            )

    def roundtrip(self, frame: Frame) -> Frame:
        try:
            self._sock.sendall(encode_frame(frame))
        except socket.timeout:
            raise EdgeInferError(ErrorCode.TIMEOUT, "socket send timed out")
        except OSError as exc:
            raise EdgeInferError(ErrorCode.TRANSPORT_FAILURE, f"send failed: {exc}")
        return read_frame(self._sock, self._max)

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass


class ShapedTransport(Transport):
    """Sleeps the simulated link delay in each direction around the inner
    transport, so benchmarks see reproducible network cost."""

    def __init__(self, inner: Transport, link: ShapedLink):
        self.inner = inner
        self.link = link

    def roundtrip(self, frame: Frame) -> Frame:
        request = encode_frame(frame)
        time.sleep(shaped_delay_micros(self.link, len(request)) / 1e6)
        response = self.inner.roundtrip(frame)
        time.sleep(shaped_delay_micros(self.link, len(encode_frame(response))) / 1e6)
        return response

    def close(self):
        self.inner.close()


class CountingTransport(Transport):
    """Wrapper observing the single-round-trip property."""

    def __init__(self, inner: Transport):
        self.inner = inner
        self.requests_sent = 0
        self.responses_received = 0
        self._lock = threading.Lock()

    def roundtrip(self, frame: Frame) -> Frame:
        with self._lock:
            self.requests_sent += 1
        response = self.inner.roundtrip(frame)
        with self._lock:
            self.responses_received += 1
        return response

    def close(self):
        self.inner.close()
