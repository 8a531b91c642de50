#!/usr/bin/env python3
"""Generate the committed golden files under tests/golden/.

Kernel and model goldens come from the independent naive-loop oracle in
tests/naive_oracle.py; wire goldens are built with struct alone; the summary
golden is recomputed spreadsheet-style. Where a package value is expected to
match an oracle value bitwise, that is asserted here at generation time.

Run from the repository root: python3 tools/gen_goldens.py
"""

from __future__ import annotations

import dataclasses
import json
import math
import struct
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import naive_oracle  # noqa: E402

from edgeinfer import corpus  # noqa: E402
from edgeinfer.bench.pipeline import run_pipeline  # noqa: E402
from edgeinfer.bench.scenario import Scenario  # noqa: E402
from edgeinfer.client import Placement  # noqa: E402
from edgeinfer.interp import execute_plan  # noqa: E402
from edgeinfer.core import Tensor  # noqa: E402

GOLDEN = ROOT / "tests" / "golden"

_DTYPE_CODES = {"float32": 1, "int64": 2, "uint8": 3}


def wire_tensor_bytes(arr: np.ndarray) -> bytes:
    """Tensor encoding (dtype u8, ndim u8, dims u64 LE, payload), built
    independently of the package's codec."""
    code = _DTYPE_CODES[str(arr.dtype)]
    out = struct.pack("<BB", code, arr.ndim)
    for d in arr.shape:
        out += struct.pack("<Q", d)
    return out + np.ascontiguousarray(arr).tobytes()


def gen_kernel_goldens():
    rng = np.random.default_rng(2024)
    a = rng.standard_normal((8, 8)).astype(np.float32)
    b = rng.standard_normal((8, 8)).astype(np.float32)
    (GOLDEN / "kernel_matmul_8x8.bin").write_bytes(
        wire_tensor_bytes(naive_oracle.matmul(a, b)))

    x = np.random.default_rng(2025).standard_normal((1, 1, 4, 4)).astype(np.float32)
    (GOLDEN / "kernel_maxpool_4x4.bin").write_bytes(
        wire_tensor_bytes(naive_oracle.maxpool2d(x, 2, 2, 2, 0)))


def gen_interp_golden():
    plan = corpus.compile_model("tiny-classifier", passes=())
    x = naive_oracle.seeded_input(plan.input_specs[0][1], 1)
    oracle_out = naive_oracle.execute_plan(plan, [x])[0]

    pkg_out = execute_plan(plan, [Tensor.from_numpy(x)]).outputs[0]
    assert pkg_out.data == np.ascontiguousarray(oracle_out).tobytes(), \
        "package output does not match the naive oracle"

    (GOLDEN / "interp_tiny_classifier_in1.bin").write_bytes(wire_tensor_bytes(x))
    (GOLDEN / "interp_tiny_classifier_out1.bin").write_bytes(wire_tensor_bytes(oracle_out))


def gen_wire_goldens():
    # Ping frame: magic, version 1, msg_type 4, request_id 7, empty body
    ping = struct.pack("<4sHBQI", b"GOWP", 1, 4, 7, 0)
    assert len(ping) == 19
    (GOLDEN / "wire_ping_frame.bin").write_bytes(ping)

    # request body: 32-byte hash + u16 count + one f32 [1,2] tensor [1.0, 2.0]
    body = bytes(range(32)) + struct.pack("<H", 1)
    body += struct.pack("<BB", 1, 2) + struct.pack("<QQ", 1, 2)
    body += struct.pack("<ff", 1.0, 2.0)
    assert len(body) == 60
    (GOLDEN / "wire_request_60.bin").write_bytes(body)


STAGES = ("acquire_us", "preprocess_us", "serialize_us", "network_us",
          "inference_us", "deserialize_us", "postprocess_us", "publish_us")


def golden_breakdown_rows(n=1000):
    """Deterministic per-frame stage values; the test rebuilds the same rows."""
    rng = np.random.default_rng(7)
    rows = []
    for _ in range(n):
        stages = [int(v) for v in rng.integers(50, 20_000, size=8)]
        e2e = sum(stages) + int(rng.integers(0, 1_500))
        rows.append((stages, e2e))
    return rows


def gen_summary_golden():
    rows = golden_breakdown_rows()
    n = len(rows)
    e2e = [r[1] for r in rows]
    fps = Fraction(n * 1_000_000, sum(e2e))
    mean_e2e = sum(e2e) / n

    def nearest_rank(vals, pct):
        s = sorted(vals)
        return s[max(1, math.ceil(pct / 100.0 * len(s))) - 1]

    lines = [f"frame_count,{n}", f"fps,{float(fps):.6f}",
             "stage,mean_us,p50_us,p95_us,max_us,share"]
    for idx, name in enumerate(STAGES + ("end_to_end_us",)):
        vals = [r[0][idx] if idx < 8 else r[1] for r in rows]
        mean = sum(vals) / n
        lines.append(f"{name},{mean:.3f},{nearest_rank(vals, 50)},"
                     f"{nearest_rank(vals, 95)},{max(vals)},{mean / mean_e2e:.6f}")
    (GOLDEN / "telemetry_summary_1000.csv").write_text("\n".join(lines) + "\n")


def gen_bench_digests(tmp_store: Path):
    corpus.build_store(tmp_store)
    digests = {}
    for model, task in (("tiny-classifier", "classify"),
                        ("tiny-segmenter", "segment"),
                        ("tiny-video", "video")):
        scenario = Scenario(name="golden", model=model, task=task, frame_count=2,
                            seed=3, width=64, height=48,
                            placement=Placement(kind="local"))
        report = run_pipeline(scenario, tmp_store)
        digests[model] = report.equivalence_digest
    (GOLDEN / "bench_digests.json").write_text(json.dumps(digests, indent=2) + "\n")


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    gen_kernel_goldens()
    gen_interp_golden()
    gen_wire_goldens()
    gen_summary_golden()
    import tempfile
    with tempfile.TemporaryDirectory() as td:
        gen_bench_digests(Path(td))
    for p in sorted(GOLDEN.iterdir()):
        print(f"{p.relative_to(ROOT)}  {p.stat().st_size} bytes")


if __name__ == "__main__":
    main()
