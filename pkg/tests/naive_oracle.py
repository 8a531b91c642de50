"""Independent naive-loop reference kernels used as test oracles.

These deliberately avoid the package's kernel implementations: every
reduction is an explicit Python scalar loop in float32, ascending index
order, matching the documented accumulation contract. Slow but unarguable.
"""

from __future__ import annotations

import math

import numpy as np

F32 = np.float32


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n), dtype=F32)
    for i in range(m):
        for j in range(n):
            acc = F32(0.0)
            for t in range(k):
                acc = F32(acc + F32(F32(a[i, t]) * F32(b[t, j])))
            out[i, j] = acc
    return out


def conv2d(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    n, c, h, wid = x.shape
    oc, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wid + 2 * pad - kw) // stride + 1
    xp = np.zeros((n, c, h + 2 * pad, wid + 2 * pad), dtype=F32)
    xp[:, :, pad : pad + h, pad : pad + wid] = x
    out = np.zeros((n, oc, oh, ow), dtype=F32)
    for ni in range(n):
        for o in range(oc):
            for y in range(oh):
                for xo in range(ow):
                    acc = F32(0.0)
                    for ci in range(c):
                        for i in range(kh):
                            for j in range(kw):
                                v = F32(xp[ni, ci, y * stride + i, xo * stride + j])
                                acc = F32(acc + F32(v * F32(w[o, ci, i, j])))
                    out[ni, o, y, xo] = acc
    return out


def _fmax(m: F32, v: F32) -> F32:
    # mirrors np.maximum: NaN in either operand wins
    if m != m:
        return m
    if v != v or v > m:
        return v
    return m


def maxpool2d(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    n, c, h, wid = x.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wid + 2 * pad - kw) // stride + 1
    xp = np.full((n, c, h + 2 * pad, wid + 2 * pad), -np.inf, dtype=F32)
    xp[:, :, pad : pad + h, pad : pad + wid] = x
    out = np.zeros((n, c, oh, ow), dtype=F32)
    for ni in range(n):
        for ci in range(c):
            for y in range(oh):
                for xo in range(ow):
                    m = F32(xp[ni, ci, y * stride, xo * stride])
                    for i in range(kh):
                        for j in range(kw):
                            if i == 0 and j == 0:
                                continue
                            m = _fmax(m, F32(xp[ni, ci, y * stride + i, xo * stride + j]))
                    out[ni, ci, y, xo] = m
    return out


def relu(x: np.ndarray) -> np.ndarray:
    out = x.astype(F32).copy().ravel()
    for i, v in enumerate(out):
        out[i] = _fmax(F32(0.0), v)
    return out.reshape(x.shape)


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(a.size, dtype=F32)
    fa, fb = a.ravel(), b.ravel()
    for i in range(a.size):
        out[i] = F32(F32(fa[i]) + F32(fb[i]))
    return out.reshape(a.shape)


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    n, c, h, w = x.shape
    out = np.zeros((n, c, 1, 1), dtype=F32)
    for ni in range(n):
        for ci in range(c):
            acc = F32(0.0)
            for i in range(h):
                for j in range(w):
                    acc = F32(acc + F32(x[ni, ci, i, j]))
            out[ni, ci, 0, 0] = F32(acc / F32(h * w))
    return out


def softmax(x: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(x.astype(F32), axis, -1)
    flat = moved.reshape(-1, moved.shape[-1])
    out = np.zeros_like(flat)
    for r in range(flat.shape[0]):
        row = flat[r]
        m = row[0]
        for v in row[1:]:
            m = _fmax(m, F32(v))
        e = np.zeros(row.shape, dtype=F32)
        for i, v in enumerate(row):
            # exp in double, rounded once to f32 (documented kernel contract)
            e[i] = F32(math.exp(float(F32(F32(v) - m))))
        s = F32(0.0)
        for v in e:
            s = F32(s + v)
        for i in range(len(row)):
            out[r, i] = F32(e[i] / s)
    return np.moveaxis(out.reshape(moved.shape), -1, axis)


def argmax_top1(x: np.ndarray) -> np.ndarray:
    flat = x.reshape(-1, x.shape[-1])
    out = np.zeros(flat.shape[0], dtype=np.int64)
    for r in range(flat.shape[0]):
        best, best_i = F32(flat[r, 0]), 0
        for i in range(1, flat.shape[1]):
            v = F32(flat[r, i])
            if v > best:  # strict: ties keep the lowest index
                best, best_i = v, i
        out[r] = best_i
    return out.reshape(x.shape[:-1])


def _squeeze_lhs(a: np.ndarray) -> np.ndarray:
    if a.ndim > 2 and all(d == 1 for d in a.shape[2:]):
        return a.reshape(a.shape[0], a.shape[1])
    return a


def execute_plan(plan, inputs: list[np.ndarray]) -> list[np.ndarray]:
    """Walk a ModelPlan with the naive kernels (structure comes from the
    plan, numerics do not)."""
    from edgeinfer.graphlang import NodeKind

    slots: list[np.ndarray | None] = [None] * plan.num_slots
    for i, arr in enumerate(inputs):
        slots[i] = arr
    for i, t in enumerate(plan.consts):
        slots[len(inputs) + i] = t.to_numpy()
    for op in plan.ops:
        args = [slots[s] for s in op.operands]
        attrs = op.attr_dict
        kind = op.kind
        if kind is NodeKind.MATMUL:
            r = matmul(_squeeze_lhs(args[0]), args[1])
        elif kind is NodeKind.CONV2D:
            r = conv2d(args[0], args[1], attrs.get("stride", 1), attrs.get("pad", 0))
        elif kind is NodeKind.RELU:
            r = relu(args[0])
        elif kind is NodeKind.ADD:
            r = add(args[0], args[1])
        elif kind is NodeKind.MAXPOOL2D:
            kh, kw = attrs["kernel"]
            r = maxpool2d(args[0], kh, kw, attrs.get("stride", 1), attrs.get("pad", 0))
        elif kind is NodeKind.GLOBAL_AVG_POOL:
            r = global_avg_pool(args[0])
        elif kind is NodeKind.SOFTMAX:
            r = softmax(args[0], attrs["axis"])
        elif kind is NodeKind.ARGMAX_TOP1:
            r = argmax_top1(args[0])
        elif kind is NodeKind.FUSED_CONV2D_RELU:
            r = relu(conv2d(args[0], args[1], attrs.get("stride", 1), attrs.get("pad", 0)))
        elif kind is NodeKind.FUSED_MATMUL_RELU:
            r = relu(matmul(_squeeze_lhs(args[0]), args[1]))
        else:
            raise AssertionError(f"oracle has no kernel for {kind}")
        slots[op.out_slot] = r
    return [slots[s] for s in plan.output_slots]


def seeded_input(shape: tuple[int, ...], k: int) -> np.ndarray:
    """Input #k convention shared by tests and the golden generator."""
    return np.random.default_rng(1000 + k).standard_normal(shape).astype(F32)
