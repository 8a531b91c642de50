"""Frozen, content-hashed executable model plans.

Binary layout (all integers little-endian):

    magic 'GOPL' | plan_version u16
    section: input specs   (u32 len | u16 count | per spec: dtype u8, ndim u8, dims u64*)
    section: output specs  (u32 len | u16 count | per spec: slot u16, dtype u8, ndim u8, dims u64*)
    section: const pool    (u32 len | u16 count | per tensor: dtype u8, ndim u8, dims u64*, payload)
    section: instructions  (u32 len | u32 count | per op: kind u8, out_slot u16,
                            n_operands u8, operand slots u16*, kind-specific attrs)
    plan_hash: sha256 over everything above (32 bytes)

Slot numbering: inputs first, then consts, then one slot per instruction.
Conv kernels use the cross-correlation convention (no kernel flip).
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

from .core import DType, EdgeInferError, ErrorCode, Tensor, tensor_num_bytes
from .graphlang import Graph, NodeKind
from .passes import run_passes

MAGIC = b"GOPL"
PLAN_VERSION = 1
HASH_BYTES = 32

_KIND_CODES = {
    NodeKind.MATMUL: 1,
    NodeKind.CONV2D: 2,
    NodeKind.RELU: 3,
    NodeKind.ADD: 4,
    NodeKind.MAXPOOL2D: 5,
    NodeKind.GLOBAL_AVG_POOL: 6,
    NodeKind.SOFTMAX: 7,
    NodeKind.ARGMAX_TOP1: 8,
    NodeKind.FUSED_CONV2D_RELU: 9,
    NodeKind.FUSED_MATMUL_RELU: 10,
}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}

TensorSpec = tuple[DType, tuple[int, ...]]


@dataclass(frozen=True)
class PlanOp:
    kind: NodeKind
    operands: tuple[int, ...]
    out_slot: int
    attrs: tuple[tuple[str, object], ...] = ()

    @property
    def attr_dict(self) -> dict:
        return dict(self.attrs)


@dataclass(frozen=True)
class ModelPlan:
    plan_version: int
    input_specs: tuple[TensorSpec, ...]
    output_specs: tuple[TensorSpec, ...]
    output_slots: tuple[int, ...]
    consts: tuple[Tensor, ...]
    ops: tuple[PlanOp, ...]
    plan_hash: bytes = field(repr=False, default=b"")

    @property
    def num_slots(self) -> int:
        return len(self.input_specs) + len(self.consts) + len(self.ops)

    @property
    def hash_hex(self) -> str:
        return self.plan_hash.hex()


# ---------------------------------------------------------------------------
# shape inference

def _check_f32(spec: TensorSpec, nid: str):
    if spec[0] is not DType.F32:
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE, f"node '{nid}': expected f32 operand, got {spec[0].name}"
        )


def _conv_out(shape, kshape, stride, pad, nid) -> tuple[int, ...]:
    if len(shape) != 4 or len(kshape) != 4:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': conv needs 4-D operands")
    n, c, h, w = shape
    oc, kc, kh, kw = kshape
    if kc != c:
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE, f"node '{nid}': channel mismatch {c} vs {kc}"
        )
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': empty conv output")
    return (n, oc, oh, ow)


def _matmul_out(a: TensorSpec, b: TensorSpec, nid) -> tuple[int, ...]:
    sa, sb = a[1], b[1]
    if len(sa) > 2 and all(d == 1 for d in sa[2:]):
        sa = sa[:2]
    if len(sa) != 2 or len(sb) != 2 or sa[1] != sb[0]:
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE, f"node '{nid}': matmul shapes {a[1]} x {b[1]}"
        )
    return (sa[0], sb[1])


def infer_node_spec(kind: NodeKind, operand_specs: list[TensorSpec], attrs: dict,
                    nid: str) -> TensorSpec:
    if kind in (NodeKind.MATMUL, NodeKind.FUSED_MATMUL_RELU):
        _check_f32(operand_specs[0], nid)
        _check_f32(operand_specs[1], nid)
        return (DType.F32, _matmul_out(operand_specs[0], operand_specs[1], nid))
    if kind in (NodeKind.CONV2D, NodeKind.FUSED_CONV2D_RELU):
        _check_f32(operand_specs[0], nid)
        _check_f32(operand_specs[1], nid)
        stride, pad = attrs.get("stride", 1), attrs.get("pad", 0)
        if stride < 1 or pad < 0:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': bad stride/pad")
        return (DType.F32, _conv_out(operand_specs[0][1], operand_specs[1][1], stride, pad, nid))
    if kind is NodeKind.RELU:
        _check_f32(operand_specs[0], nid)
        return operand_specs[0]
    if kind is NodeKind.ADD:
        _check_f32(operand_specs[0], nid)
        if operand_specs[0] != operand_specs[1]:
            raise EdgeInferError(
                ErrorCode.INVALID_SHAPE,
                f"node '{nid}': add operands differ: {operand_specs[0]} vs {operand_specs[1]}",
            )
        return operand_specs[0]
    if kind is NodeKind.MAXPOOL2D:
        _check_f32(operand_specs[0], nid)
        if "kernel" not in attrs:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': pool needs kernel=")
        kh, kw = attrs["kernel"]
        stride, pad = attrs.get("stride", 1), attrs.get("pad", 0)
        shape = operand_specs[0][1]
        if len(shape) != 4:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': pool needs 4-D input")
        n, c, h, w = shape
        oh = (h + 2 * pad - kh) // stride + 1
        ow = (w + 2 * pad - kw) // stride + 1
        if oh < 1 or ow < 1:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': empty pool output")
        return (DType.F32, (n, c, oh, ow))
    if kind is NodeKind.GLOBAL_AVG_POOL:
        _check_f32(operand_specs[0], nid)
        shape = operand_specs[0][1]
        if len(shape) != 4:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': gap needs 4-D input")
        return (DType.F32, (shape[0], shape[1], 1, 1))
    if kind is NodeKind.SOFTMAX:
        _check_f32(operand_specs[0], nid)
        shape = operand_specs[0][1]
        axis = attrs.get("axis", len(shape) - 1)
        if not -len(shape) <= axis < len(shape):
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': bad softmax axis")
        return operand_specs[0]
    if kind is NodeKind.ARGMAX_TOP1:
        _check_f32(operand_specs[0], nid)
        shape = operand_specs[0][1]
        if len(shape) < 2:
            raise EdgeInferError(
                ErrorCode.INVALID_SHAPE, f"node '{nid}': argmax needs >= 2 dims"
            )
        return (DType.I64, shape[:-1])
    raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"node '{nid}': cannot infer kind {kind}")


# ---------------------------------------------------------------------------
# compilation

def compile_graph(g: Graph, passes=()) -> ModelPlan:
    """Apply passes, shape-infer, assign slots, and emit a hashed plan."""
    g = run_passes(g, passes)
    topo = g.topo_order()

    specs: dict[str, TensorSpec] = {}
    slots: dict[str, int] = {}
    consts: list[Tensor] = []
    const_ids = [nid for nid in topo if g.nodes[nid].kind is NodeKind.CONST]

    for i, nid in enumerate(g.inputs):
        node = g.nodes[nid]
        specs[nid] = (node.input_dtype, node.input_shape)
        slots[nid] = i
    for i, nid in enumerate(const_ids):
        t = g.nodes[nid].const_value
        specs[nid] = (t.dtype, t.shape)
        slots[nid] = len(g.inputs) + i
        consts.append(t)

    ops: list[PlanOp] = []
    next_slot = len(g.inputs) + len(consts)
    for nid in topo:
        node = g.nodes[nid]
        if node.kind in (NodeKind.INPUT, NodeKind.CONST):
            continue
        operand_specs = [specs[op] for op in node.operands]
        specs[nid] = infer_node_spec(node.kind, operand_specs, node.attrs, nid)
        attrs = _canonical_attrs(node.kind, node.attrs, specs[node.operands[0]][1])
        ops.append(PlanOp(node.kind, tuple(slots[op] for op in node.operands),
                          next_slot, attrs))
        slots[nid] = next_slot
        next_slot += 1

    plan = ModelPlan(
        plan_version=PLAN_VERSION,
        input_specs=tuple(specs[nid] for nid in g.inputs),
        output_specs=tuple(specs[nid] for nid in g.outputs),
        output_slots=tuple(slots[nid] for nid in g.outputs),
        consts=tuple(consts),
        ops=tuple(ops),
    )
    body = _serialize_body(plan)
    return ModelPlan(
        plan.plan_version, plan.input_specs, plan.output_specs, plan.output_slots,
        plan.consts, plan.ops, hashlib.sha256(body).digest(),
    )


def _canonical_attrs(kind: NodeKind, attrs: dict, in_shape) -> tuple:
    if kind in (NodeKind.CONV2D, NodeKind.FUSED_CONV2D_RELU):
        return (("stride", attrs.get("stride", 1)), ("pad", attrs.get("pad", 0)))
    if kind is NodeKind.MAXPOOL2D:
        kh, kw = attrs["kernel"]
        return (("kernel", (kh, kw)), ("stride", attrs.get("stride", 1)),
                ("pad", attrs.get("pad", 0)))
    if kind is NodeKind.SOFTMAX:
        axis = attrs.get("axis", len(in_shape) - 1)
        return (("axis", axis % len(in_shape)),)
    return ()


# ---------------------------------------------------------------------------
# serialization

def _pack_spec(dtype: DType, shape) -> bytes:
    return struct.pack("<BB", dtype.value, len(shape)) + b"".join(
        struct.pack("<Q", d) for d in shape
    )


def _serialize_body(p: ModelPlan) -> bytes:
    out = [MAGIC, struct.pack("<H", p.plan_version)]

    sec = struct.pack("<H", len(p.input_specs)) + b"".join(
        _pack_spec(d, s) for d, s in p.input_specs
    )
    out.append(struct.pack("<I", len(sec)) + sec)

    sec = struct.pack("<H", len(p.output_specs)) + b"".join(
        struct.pack("<H", slot) + _pack_spec(d, s)
        for slot, (d, s) in zip(p.output_slots, p.output_specs)
    )
    out.append(struct.pack("<I", len(sec)) + sec)

    sec = struct.pack("<H", len(p.consts)) + b"".join(
        _pack_spec(t.dtype, t.shape) + t.data for t in p.consts
    )
    out.append(struct.pack("<I", len(sec)) + sec)

    parts = [struct.pack("<I", len(p.ops))]
    for op in p.ops:
        parts.append(struct.pack("<BHB", _KIND_CODES[op.kind], op.out_slot, len(op.operands)))
        parts.extend(struct.pack("<H", s) for s in op.operands)
        attrs = op.attr_dict
        if op.kind in (NodeKind.CONV2D, NodeKind.FUSED_CONV2D_RELU):
            parts.append(struct.pack("<HH", attrs["stride"], attrs["pad"]))
        elif op.kind is NodeKind.MAXPOOL2D:
            kh, kw = attrs["kernel"]
            parts.append(struct.pack("<HHHH", kh, kw, attrs["stride"], attrs["pad"]))
        elif op.kind is NodeKind.SOFTMAX:
            parts.append(struct.pack("<B", attrs["axis"]))
    sec = b"".join(parts)
    out.append(struct.pack("<I", len(sec)) + sec)
    return b"".join(out)


def serialize_plan(p: ModelPlan) -> bytes:
    body = _serialize_body(p)
    digest = hashlib.sha256(body).digest()
    if p.plan_hash and p.plan_hash != digest:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "plan_hash does not match content")
    return body + digest


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "truncated plan")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _read_spec(r: _Reader) -> TensorSpec:
    code, ndim = r.unpack("<BB")
    try:
        dtype = DType(code)
    except ValueError:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad dtype code {code}")
    if not 1 <= ndim <= 5:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad ndim {ndim}")
    shape = tuple(r.unpack("<Q")[0] for _ in range(ndim))
    if any(d < 1 for d in shape):
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad shape {shape}")
    return (dtype, shape)


def deserialize_plan(data: bytes) -> ModelPlan:
    if len(data) < len(MAGIC) + 2 + HASH_BYTES:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "plan too short")
    body, stored_hash = data[:-HASH_BYTES], data[-HASH_BYTES:]
    if hashlib.sha256(body).digest() != stored_hash:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "plan hash verification failed")
    r = _Reader(body)
    if r.take(4) != MAGIC:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "bad plan magic")
    (version,) = r.unpack("<H")
    if version != PLAN_VERSION:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"unsupported plan version {version}")

    (sec_len,) = r.unpack("<I")
    end = r.pos + sec_len
    (n_in,) = r.unpack("<H")
    input_specs = tuple(_read_spec(r) for _ in range(n_in))
    if r.pos != end:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "input spec section length mismatch")

    (sec_len,) = r.unpack("<I")
    end = r.pos + sec_len
    (n_out,) = r.unpack("<H")
    output_slots = []
    output_specs = []
    for _ in range(n_out):
        (slot,) = r.unpack("<H")
        output_slots.append(slot)
        output_specs.append(_read_spec(r))
    if r.pos != end:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "output spec section length mismatch")

    (sec_len,) = r.unpack("<I")
    end = r.pos + sec_len
    (n_const,) = r.unpack("<H")
    consts = []
    for _ in range(n_const):
        dtype, shape = _read_spec(r)
        payload = r.take(tensor_num_bytes(dtype, shape))
        consts.append(Tensor(dtype, shape, bytes(payload)))
    if r.pos != end:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "const section length mismatch")

    (sec_len,) = r.unpack("<I")
    end = r.pos + sec_len
    (n_ops,) = r.unpack("<I")
    ops = []
    for _ in range(n_ops):
        code, out_slot, n_operands = r.unpack("<BHB")
        kind = _CODE_KINDS.get(code)
        if kind is None:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"bad op kind code {code}")
        operands = tuple(r.unpack("<H")[0] for _ in range(n_operands))
        if kind in (NodeKind.CONV2D, NodeKind.FUSED_CONV2D_RELU):
            stride, pad = r.unpack("<HH")
            attrs = (("stride", stride), ("pad", pad))
        elif kind is NodeKind.MAXPOOL2D:
            kh, kw, stride, pad = r.unpack("<HHHH")
            attrs = (("kernel", (kh, kw)), ("stride", stride), ("pad", pad))
        elif kind is NodeKind.SOFTMAX:
            (axis,) = r.unpack("<B")
            attrs = (("axis", axis),)
        else:
            attrs = ()
        ops.append(PlanOp(kind, operands, out_slot, attrs))
    if r.pos != end or r.pos != len(body):
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "instruction section length mismatch")

    plan = ModelPlan(version, input_specs, tuple(output_specs), tuple(output_slots),
                     tuple(consts), tuple(ops), stored_hash)
    _validate_plan(plan)
    return plan


def _validate_plan(p: ModelPlan):
    n_fixed = len(p.input_specs) + len(p.consts)
    defined = set(range(n_fixed))
    for op in p.ops:
        for s in op.operands:
            if s not in defined:
                raise EdgeInferError(
                    ErrorCode.MALFORMED_FRAME, f"slot {s} used before definition"
                )
        if op.out_slot in defined:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"slot {op.out_slot} redefined")
        defined.add(op.out_slot)
    for s in p.output_slots:
        if s not in defined:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"output slot {s} undefined")
