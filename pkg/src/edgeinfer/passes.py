"""Graph optimization passes: dead code elimination, constant folding, fusion."""

from __future__ import annotations

import copy

from .core import EdgeInferError, ErrorCode, Tensor
from .graphlang import Graph, Node, NodeKind
from .ops import apply_kind

PASS_NAMES = ("dce", "const_fold", "fuse")

# order used when a caller asks for "all": folding can orphan nodes, so DCE
# runs again after it; fusion goes last so it sees final consumer counts
DEFAULT_PIPELINE = ("dce", "const_fold", "dce", "fuse")


def pass_dce(g: Graph) -> Graph:
    """Keep exactly the nodes reachable backwards from the outputs."""
    live: set[str] = set()
    stack = list(g.outputs)
    while stack:
        nid = stack.pop()
        if nid in live:
            continue
        live.add(nid)
        stack.extend(g.nodes[nid].operands)
    nodes = {nid: copy.copy(n) for nid, n in g.nodes.items() if nid in live}
    inputs = [nid for nid in g.inputs if nid in live]
    return Graph(nodes, inputs, list(g.outputs))


def pass_const_fold(g: Graph) -> Graph:
    """Replace every op whose operands are all Const with a Const of its value.

    Processing in topological order folds maximal const subgraphs in one pass;
    evaluation goes through the runtime kernels, so folded values are
    bit-identical to executing the original subgraph.
    """
    nodes = {nid: copy.copy(n) for nid, n in g.nodes.items()}
    for nid in g.topo_order():
        node = nodes[nid]
        if node.kind in (NodeKind.INPUT, NodeKind.CONST):
            continue
        if not node.operands:
            continue
        if not all(nodes[op].kind is NodeKind.CONST for op in node.operands):
            continue
        args = [nodes[op].const_value.to_numpy() for op in node.operands]
        try:
            result = apply_kind(node.kind, args, node.attrs)
        except EdgeInferError as exc:
            raise EdgeInferError(
                ErrorCode.BACKEND_FAILURE, f"folding node '{nid}' failed: {exc}"
            )
        nodes[nid] = Node(nid, NodeKind.CONST, const_value=Tensor.from_numpy(result))
    return Graph(nodes, list(g.inputs), list(g.outputs))


def _consumer_counts(g: Graph) -> dict[str, int]:
    counts = {nid: 0 for nid in g.nodes}
    for node in g.nodes.values():
        for op in node.operands:
            counts[op] += 1
    for nid in g.outputs:
        counts[nid] += 1
    return counts


_FUSABLE = {NodeKind.CONV2D: NodeKind.FUSED_CONV2D_RELU,
            NodeKind.MATMUL: NodeKind.FUSED_MATMUL_RELU}


def pass_fuse(g: Graph) -> Graph:
    """Rewrite ReLU(Conv2D(..)) / ReLU(MatMul(..)) with a single-consumer
    producer into the corresponding fused kind."""
    counts = _consumer_counts(g)
    nodes = {nid: copy.copy(n) for nid, n in g.nodes.items()}
    removed: set[str] = set()
    for nid, node in g.nodes.items():
        if node.kind is not NodeKind.RELU:
            continue
        prod_id = node.operands[0]
        producer = g.nodes[prod_id]
        fused_kind = _FUSABLE.get(producer.kind)
        if fused_kind is None or counts[prod_id] != 1:
            continue
        nodes[nid] = Node(nid, fused_kind, producer.operands, dict(producer.attrs))
        removed.add(prod_id)
    for nid in removed:
        del nodes[nid]
    inputs = [nid for nid in g.inputs if nid in nodes]
    return Graph(nodes, inputs, list(g.outputs))


_PASSES = {"dce": pass_dce, "const_fold": pass_const_fold, "fuse": pass_fuse}


def run_passes(g: Graph, passes) -> Graph:
    if passes == "all":
        passes = DEFAULT_PIPELINE
    for name in passes:
        if name not in _PASSES:
            raise EdgeInferError(ErrorCode.MALFORMED_FRAME, f"unknown pass '{name}'")
        g = _PASSES[name](g)
    return g
