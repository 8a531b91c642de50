"""Single dispatch point from node kinds to kernels.

Constant folding and runtime execution both route through apply_kind, so a
folded subgraph is bit-identical to executing it.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import EdgeInferError, ErrorCode
from .graphlang import NodeKind


def _squeeze_matmul_lhs(a: np.ndarray) -> np.ndarray:
    # [m, k, 1, ...] is accepted as [m, k] so pooled feature maps can feed
    # a classifier head without a dedicated reshape op
    if a.ndim > 2 and all(d == 1 for d in a.shape[2:]):
        return a.reshape(a.shape[0], a.shape[1])
    return a


def apply_kind(kind: NodeKind, args: list[np.ndarray], attrs: dict) -> np.ndarray:
    if kind is NodeKind.MATMUL:
        return kernels.matmul(_squeeze_matmul_lhs(args[0]), args[1])
    if kind is NodeKind.CONV2D:
        return kernels.conv2d(args[0], args[1], attrs.get("stride", 1), attrs.get("pad", 0))
    if kind is NodeKind.RELU:
        return kernels.relu(args[0])
    if kind is NodeKind.ADD:
        return kernels.add(args[0], args[1])
    if kind is NodeKind.MAXPOOL2D:
        kh, kw = attrs["kernel"]
        return kernels.maxpool2d(args[0], kh, kw, attrs.get("stride", 1), attrs.get("pad", 0))
    if kind is NodeKind.GLOBAL_AVG_POOL:
        return kernels.global_avg_pool(args[0])
    if kind is NodeKind.SOFTMAX:
        return kernels.softmax(args[0], attrs.get("axis", -1))
    if kind is NodeKind.ARGMAX_TOP1:
        return kernels.argmax_top1(args[0])
    if kind is NodeKind.FUSED_CONV2D_RELU:
        return kernels.relu(
            kernels.conv2d(args[0], args[1], attrs.get("stride", 1), attrs.get("pad", 0))
        )
    if kind is NodeKind.FUSED_MATMUL_RELU:
        return kernels.relu(kernels.matmul(_squeeze_matmul_lhs(args[0]), args[1]))
    raise EdgeInferError(ErrorCode.BACKEND_FAILURE, f"no kernel for kind {kind}")
