"""Pure numpy kernels with pinned accumulation order.

Every reduction runs in ascending index order with one float32 operation per
step, so results are bit-identical to the compiled kernels and to a naive
scalar loop. Do not replace the explicit loops with numpy reductions:
np.sum/np.dot use pairwise or blocked summation and break that guarantee.
"""

from __future__ import annotations

import numpy as np

from ..core import EdgeInferError, ErrorCode

_F32 = np.float32


def _require(cond: bool, msg: str):
    if not cond:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, msg)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _require(a.ndim == 2 and b.ndim == 2, f"matmul needs 2-D operands, got {a.shape} x {b.shape}")
    _require(a.shape[1] == b.shape[0], f"matmul inner dims differ: {a.shape} x {b.shape}")
    m, k = a.shape
    out = np.zeros((m, b.shape[1]), dtype=_F32)
    for t in range(k):
        # one f32 multiply and one f32 add per element, ascending t
        out += a[:, t : t + 1] * b[t : t + 1, :]
    return out


def conv2d(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    _require(x.ndim == 4 and w.ndim == 4, f"conv2d needs 4-D operands, got {x.shape}, {w.shape}")
    n, c, h, wid = x.shape
    oc, wc, kh, kw = w.shape
    _require(wc == c, f"conv2d channel mismatch: input {c}, kernel {wc}")
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wid + 2 * pad - kw) // stride + 1
    _require(oh >= 1 and ow >= 1, f"conv2d output would be empty for {x.shape}/{w.shape}")
    xp = np.zeros((n, c, h + 2 * pad, wid + 2 * pad), dtype=_F32)
    xp[:, :, pad : pad + h, pad : pad + wid] = x
    out = np.zeros((n, oc, oh, ow), dtype=_F32)
    # accumulation per output element runs ascending over (c, kh, kw)
    for ci in range(c):
        for i in range(kh):
            for j in range(kw):
                patch = xp[:, ci, i : i + stride * oh : stride, j : j + stride * ow : stride]
                for o in range(oc):
                    out[:, o] += patch * w[o, ci, i, j]
    return out


def maxpool2d(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    _require(x.ndim == 4, f"maxpool2d needs a 4-D input, got {x.shape}")
    n, c, h, wid = x.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wid + 2 * pad - kw) // stride + 1
    _require(oh >= 1 and ow >= 1, f"maxpool2d output would be empty for {x.shape}")
    if pad:
        xp = np.full((n, c, h + 2 * pad, wid + 2 * pad), -np.inf, dtype=_F32)
        xp[:, :, pad : pad + h, pad : pad + wid] = x
    else:
        xp = x
    out = None
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
            out = patch.copy() if out is None else np.maximum(out, patch)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, _F32(0.0))


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _require(a.shape == b.shape, f"add shapes differ: {a.shape} vs {b.shape}")
    return a + b


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    _require(x.ndim == 4, f"global_avg_pool needs a 4-D input, got {x.shape}")
    n, c, h, w = x.shape
    acc = np.zeros((n, c), dtype=_F32)
    for i in range(h):
        for j in range(w):
            acc += x[:, :, i, j]
    return (acc / _F32(h * w)).reshape(n, c, 1, 1)


def softmax(x: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(x, axis, -1)
    m = np.max(moved, axis=-1, keepdims=True)
    # exp computed in f64 then rounded once to f32: a single well-behaved
    # libm path instead of dtype-dependent SIMD variants
    e = np.exp((moved - m).astype(np.float64)).astype(_F32)
    s = np.zeros(e.shape[:-1], dtype=_F32)
    for i in range(e.shape[-1]):
        s = s + e[..., i]
    out = e / s[..., None]
    return np.moveaxis(out, -1, axis)


def argmax_top1(x: np.ndarray) -> np.ndarray:
    _require(x.ndim >= 2, f"argmax_top1 needs >= 2 dims, got {x.shape}")
    # np.argmax returns the first (lowest) index attaining the max
    return np.argmax(x, axis=-1).astype(np.int64)
