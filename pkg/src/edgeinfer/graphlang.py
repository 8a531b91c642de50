"""Editable graph IR and the line-oriented textual frontend.

Source format, one statement per line:

    input <id> <dtype>[d0,d1,...]
    const <id> <dtype>[dims] = <comma-separated literals | @file.bin>
    <id> = <kind>(<args>) {key=value, ...}
    output <id>

Comments start with ``#``. Attribute keys: stride, pad, axis, kernel
(pool window, ``2`` or ``2x3``).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DType, EdgeInferError, ErrorCode, Tensor, tensor_num_bytes


class NodeKind(enum.Enum):
    INPUT = "input"
    CONST = "const"
    MATMUL = "matmul"
    CONV2D = "conv2d"
    RELU = "relu"
    ADD = "add"
    MAXPOOL2D = "maxpool2d"
    GLOBAL_AVG_POOL = "global_avg_pool"
    SOFTMAX = "softmax"
    ARGMAX_TOP1 = "argmax_top1"
    FUSED_CONV2D_RELU = "fused_conv2d_relu"
    FUSED_MATMUL_RELU = "fused_matmul_relu"


# operand arity per computational kind; fused kinds never appear in source
ARITY = {
    NodeKind.MATMUL: 2,
    NodeKind.CONV2D: 2,
    NodeKind.RELU: 1,
    NodeKind.ADD: 2,
    NodeKind.MAXPOOL2D: 1,
    NodeKind.GLOBAL_AVG_POOL: 1,
    NodeKind.SOFTMAX: 1,
    NodeKind.ARGMAX_TOP1: 1,
    NodeKind.FUSED_CONV2D_RELU: 2,
    NodeKind.FUSED_MATMUL_RELU: 2,
}

_SOURCE_KINDS = {
    k.value: k
    for k in ARITY
    if k not in (NodeKind.FUSED_CONV2D_RELU, NodeKind.FUSED_MATMUL_RELU)
}

_DTYPES = {"f32": DType.F32, "i64": DType.I64, "u8": DType.U8}


@dataclass
class Node:
    id: str
    kind: NodeKind
    operands: tuple[str, ...] = ()
    attrs: dict = field(default_factory=dict)
    const_value: Tensor | None = None
    input_dtype: DType | None = None
    input_shape: tuple[int, ...] | None = None


@dataclass
class Graph:
    nodes: dict[str, Node]
    inputs: list[str]
    outputs: list[str]

    def topo_order(self) -> list[str]:
        """Topological order over all nodes; raises on cycles."""
        order: list[str] = []
        state: dict[str, int] = {}  # 0=visiting, 1=done

        def visit(nid: str, stack: list[str]):
            st = state.get(nid)
            if st == 1:
                return
            if st == 0:
                raise EdgeInferError(
                    ErrorCode.MALFORMED_FRAME, f"cycle involving node '{nid}'"
                )
            state[nid] = 0
            stack.append(nid)
            for op in self.nodes[nid].operands:
                visit(op, stack)
            stack.pop()
            state[nid] = 1
            order.append(nid)

        for nid in self.nodes:
            visit(nid, [])
        return order


def validate_graph(g: Graph):
    for nid, node in g.nodes.items():
        for op in node.operands:
            if op not in g.nodes:
                raise EdgeInferError(
                    ErrorCode.MALFORMED_FRAME, f"node '{nid}' references unknown '{op}'"
                )
        if node.kind in ARITY and len(node.operands) != ARITY[node.kind]:
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME,
                f"{node.kind.value} takes {ARITY[node.kind]} operands, "
                f"node '{nid}' has {len(node.operands)}",
            )
    for nid in g.inputs:
        if g.nodes[nid].kind is not NodeKind.INPUT:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"'{nid}' is not an input node")
    for nid in g.outputs:
        if nid not in g.nodes:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"output '{nid}' undefined")
    if not g.outputs:
        raise EdgeInferError(ErrorCode.MALFORMED_FRAME, "graph declares no outputs")
    g.topo_order()  # cycle check


class _ParseError(EdgeInferError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(ErrorCode.MALFORMED_FRAME, f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


_TYPE_RE = re.compile(r"^(f32|i64|u8)\[([0-9]+(?:,[0-9]+)*)\]$")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_ASSIGN_RE = re.compile(
    r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([a-z0-9_]+)\(([^()]*)\)\s*(\{.*\})?$"
)


def _parse_typespec(tok: str, lineno: int, col: int) -> tuple[DType, tuple[int, ...]]:
    m = _TYPE_RE.match(tok)
    if not m:
        raise _ParseError(lineno, col, f"bad type spec '{tok}'")
    dtype = _DTYPES[m.group(1)]
    shape = tuple(int(d) for d in m.group(2).split(","))
    if any(d < 1 for d in shape) or len(shape) > 5:
        raise _ParseError(lineno, col, f"bad shape {list(shape)}")
    return dtype, shape


def _parse_attrs(text: str, lineno: int) -> dict:
    attrs: dict = {}
    body = text.strip()[1:-1].strip()
    if not body:
        return attrs
    for item in body.split(","):
        if "=" not in item:
            raise _ParseError(lineno, 0, f"bad attribute '{item.strip()}'")
        key, val = (s.strip() for s in item.split("=", 1))
        if key in ("stride", "pad", "axis"):
            try:
                attrs[key] = int(val)
            except ValueError:
                raise _ParseError(lineno, 0, f"attribute {key}={val!r} is not an integer")
        elif key == "kernel":
            parts = val.split("x")
            try:
                dims = [int(p) for p in parts]
            except ValueError:
                raise _ParseError(lineno, 0, f"bad kernel spec '{val}'")
            if len(dims) == 1:
                attrs["kernel"] = (dims[0], dims[0])
            elif len(dims) == 2:
                attrs["kernel"] = (dims[0], dims[1])
            else:
                raise _ParseError(lineno, 0, f"bad kernel spec '{val}'")
        else:
            raise _ParseError(lineno, 0, f"unknown attribute '{key}'")
    return attrs


def _const_tensor(dtype: DType, shape, rhs: str, lineno: int, base_dir: Path | None) -> Tensor:
    rhs = rhs.strip()
    if rhs.startswith("@"):
        rel = rhs[1:].strip()
        if base_dir is None:
            raise _ParseError(lineno, 0, f"'@{rel}' needs a base directory")
        path = base_dir / rel
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise _ParseError(lineno, 0, f"cannot read '{rel}': {exc}")
        if len(data) != tensor_num_bytes(dtype, shape):
            raise _ParseError(
                lineno, 0, f"'{rel}' is {len(data)} bytes, shape needs "
                f"{tensor_num_bytes(dtype, shape)}"
            )
        return Tensor(dtype, tuple(shape), data)
    try:
        values = [float(v) for v in rhs.split(",")]
    except ValueError:
        raise _ParseError(lineno, 0, f"bad literal list '{rhs[:40]}'")
    arr = np.array(values, dtype=dtype.numpy_dtype)
    if arr.size != int(np.prod(shape)):
        raise _ParseError(lineno, 0, f"{arr.size} literals for shape {list(shape)}")
    return Tensor.from_numpy(arr.reshape(shape))


def parse_graph(text: str, base_dir: str | Path | None = None) -> Graph:
    """Parse graph source; total over arbitrary input, errors carry line/col."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"source is not UTF-8: {exc}")
    base = Path(base_dir) if base_dir is not None else None
    nodes: dict[str, Node] = {}
    inputs: list[str] = []
    outputs: list[str] = []

    def declare(nid: str, lineno: int, node: Node):
        if not _IDENT_RE.match(nid):
            raise _ParseError(lineno, 0, f"bad identifier '{nid}'")
        if nid in nodes:
            raise _ParseError(lineno, 0, f"duplicate definition of '{nid}'")
        nodes[nid] = node

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("input "):
            parts = line.split()
            if len(parts) != 3:
                raise _ParseError(lineno, 0, "expected: input <id> <dtype>[dims]")
            dtype, shape = _parse_typespec(parts[2], lineno, len(parts[1]) + 7)
            declare(parts[1], lineno, Node(parts[1], NodeKind.INPUT,
                                           input_dtype=dtype, input_shape=shape))
            inputs.append(parts[1])
        elif line.startswith("const "):
            head, _, rhs = line.partition("=")
            parts = head.split()
            if len(parts) != 3 or not rhs.strip():
                raise _ParseError(lineno, 0, "expected: const <id> <dtype>[dims] = ...")
            dtype, shape = _parse_typespec(parts[2], lineno, 0)
            tensor = _const_tensor(dtype, shape, rhs, lineno, base)
            declare(parts[1], lineno, Node(parts[1], NodeKind.CONST, const_value=tensor))
        elif line.startswith("output "):
            parts = line.split()
            if len(parts) != 2:
                raise _ParseError(lineno, 0, "expected: output <id>")
            outputs.append(parts[1])
        else:
            m = _ASSIGN_RE.match(line)
            if not m:
                raise _ParseError(lineno, 0, f"cannot parse statement '{line[:60]}'")
            nid, kind_name, args, attr_text = m.groups()
            kind = _SOURCE_KINDS.get(kind_name)
            if kind is None:
                raise _ParseError(lineno, line.index(kind_name), f"unknown kind '{kind_name}'")
            operands = tuple(a.strip() for a in args.split(",")) if args.strip() else ()
            if len(operands) != ARITY[kind]:
                raise _ParseError(
                    lineno, 0,
                    f"{kind_name} takes {ARITY[kind]} operand(s), got {len(operands)}",
                )
            attrs = _parse_attrs(attr_text, lineno) if attr_text else {}
            declare(nid, lineno, Node(nid, kind, operands, attrs))

    g = Graph(nodes, inputs, outputs)
    validate_graph(g)
    return g
