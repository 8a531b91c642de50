"""Deterministic plan interpreter; the single source of numeric truth.

speed_factor emulates device speed without touching the numeric path:
below 1 each instruction sleeps proportionally (slow device), above 1 the
reported timings are divided by the factor (simulated fast device).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import DType, EdgeInferError, ErrorCode, Tensor
from .ops import apply_kind
from .plan import ModelPlan


@dataclass
class ExecutionReport:
    outputs: list[Tensor]
    per_op_micros: list[tuple[int, int]]
    total_micros: int


def _check_inputs(plan: ModelPlan, inputs: list[Tensor]):
    if len(inputs) != len(plan.input_specs):
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE,
            f"plan takes {len(plan.input_specs)} inputs, got {len(inputs)}",
        )
    for i, (t, (dtype, shape)) in enumerate(zip(inputs, plan.input_specs)):
        if t.dtype is not dtype:
            raise EdgeInferError(
                ErrorCode.DTYPE_MISMATCH,
                f"input {i}: expected {dtype.name}, got {t.dtype.name}",
            )
        if t.shape != shape:
            raise EdgeInferError(
                ErrorCode.INVALID_SHAPE,
                f"input {i}: expected shape {list(shape)}, got {list(t.shape)}",
            )


def execute_plan(plan: ModelPlan, inputs: list[Tensor],
                 speed_factor: float = 1.0) -> ExecutionReport:
    if speed_factor <= 0:
        raise EdgeInferError(ErrorCode.BACKEND_FAILURE, "speed_factor must be positive")
    _check_inputs(plan, inputs)

    slots: list[np.ndarray | None] = [None] * plan.num_slots
    for i, t in enumerate(inputs):
        slots[i] = t.to_numpy()
    base = len(inputs)
    for i, t in enumerate(plan.consts):
        slots[base + i] = t.to_numpy()

    per_op: list[tuple[int, int]] = []
    t_start = time.perf_counter_ns()
    for idx, op in enumerate(plan.ops):
        t0 = time.perf_counter_ns()
        args = [slots[s] for s in op.operands]
        try:
            result = apply_kind(op.kind, args, op.attr_dict)
        except EdgeInferError:
            raise
        except Exception as exc:
            raise EdgeInferError(
                ErrorCode.BACKEND_FAILURE, f"instruction {idx} ({op.kind.value}): {exc}"
            )
        slots[op.out_slot] = result
        elapsed_ns = time.perf_counter_ns() - t0
        if speed_factor < 1.0:
            time.sleep(elapsed_ns * (1.0 / speed_factor - 1.0) / 1e9)
            elapsed_ns = time.perf_counter_ns() - t0
            per_op.append((idx, elapsed_ns // 1000))
        elif speed_factor > 1.0:
            per_op.append((idx, int(elapsed_ns / speed_factor) // 1000))
        else:
            per_op.append((idx, elapsed_ns // 1000))

    total_ns = time.perf_counter_ns() - t_start
    if speed_factor > 1.0:
        total_ns = int(total_ns / speed_factor)
    total_us = max(total_ns // 1000, max((us for _, us in per_op), default=0))

    outputs = []
    for slot, (dtype, shape) in zip(plan.output_slots, plan.output_specs):
        arr = slots[slot]
        t = Tensor.from_numpy(np.ascontiguousarray(arr))
        if t.dtype is not dtype or t.shape != shape:
            raise EdgeInferError(
                ErrorCode.BACKEND_FAILURE,
                f"output slot {slot} produced {t.dtype.name}{list(t.shape)}, "
                f"plan declares {dtype.name}{list(shape)}",
            )
        outputs.append(t)
    return ExecutionReport(outputs, per_op, total_us)
