"""Kernel backend selection.

The compiled extension covers the hot loops (matmul, conv2d, maxpool2d); the
remaining kernels are cheap and always run through the numpy fallback. Set
EDGEINFER_PURE=1 to force the fallback even when the extension is built.
"""

from __future__ import annotations

import os

import numpy as np

from ..core import EdgeInferError, ErrorCode
from . import pure
from .pure import add, argmax_top1, global_avg_pool, relu, softmax

_fast = None
if os.environ.get("EDGEINFER_PURE", "") not in ("1", "true"):
    try:
        import importlib

        _fast = importlib.import_module("edgeinfer.kernels._fast")
    except ImportError:
        _fast = None

BACKEND = "compiled" if _fast is not None else "pure"


def _as_c_f32(x: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float32)
    if not arr.flags.writeable:  # frombuffer-backed tensors are read-only
        arr = arr.copy()
    return arr


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if _fast is None:
        return pure.matmul(a, b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE, f"matmul shape mismatch: {a.shape} x {b.shape}"
        )
    return _fast.matmul(_as_c_f32(a), _as_c_f32(b))


def conv2d(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    if _fast is None:
        return pure.conv2d(x, w, stride, pad)
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE, f"conv2d shape mismatch: {x.shape} / {w.shape}"
        )
    if (x.shape[2] + 2 * pad - w.shape[2]) // stride + 1 < 1 or (
        x.shape[3] + 2 * pad - w.shape[3]
    ) // stride + 1 < 1:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"conv2d empty output for {x.shape}")
    return _fast.conv2d(_as_c_f32(x), _as_c_f32(w), stride, pad)


def maxpool2d(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    if _fast is None:
        return pure.maxpool2d(x, kh, kw, stride, pad)
    if x.ndim != 4:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"maxpool2d needs 4-D input, got {x.shape}")
    if (x.shape[2] + 2 * pad - kh) // stride + 1 < 1 or (
        x.shape[3] + 2 * pad - kw
    ) // stride + 1 < 1:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"maxpool2d empty output for {x.shape}")
    return _fast.maxpool2d(_as_c_f32(x), kh, kw, stride, pad)


__all__ = [
    "BACKEND",
    "add",
    "argmax_top1",
    "conv2d",
    "global_avg_pool",
    "matmul",
    "maxpool2d",
    "relu",
    "softmax",
]
