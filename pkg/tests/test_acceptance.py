"""Acceptance gate: one test per release criterion, each printing a single
PASS/FAIL line. Run with plain `pytest`; the lines bypass output capture."""

import itertools
import json
import random
import struct
import time
from fractions import Fraction

import numpy as np
import pytest

import naive_oracle
from conftest import GOLDEN
from edgeinfer import corpus, wire
from edgeinfer.bench.crossover import crossover_table, run_crossover_study
from edgeinfer.bench.pipeline import run_pipeline
from edgeinfer.bench.power import power_study, power_table
from edgeinfer.bench.replay import run_replay
from edgeinfer.bench.report import emit_report
from edgeinfer.bench.scenario import Scenario
from edgeinfer.client import Placement, session_open
from edgeinfer.core import EdgeInferError, ErrorCode, Tensor
from edgeinfer.graphlang import parse_graph
from edgeinfer.interp import execute_plan
from edgeinfer.passes import pass_dce
from edgeinfer.plan import compile_graph

N_SEEDED_INPUTS = 100
PASS_SUBSETS = [tuple(p for p, keep in zip(("dce", "const_fold", "fuse"), bits)
                      if keep)
                for bits in itertools.product((False, True), repeat=3)]


def emit(capsys, name: str, ok: bool, detail: str = ""):
    with capsys.disabled():
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}" + (f": {detail}" if detail else ""), flush=True)
    assert ok, f"{name} failed ({detail})"


def seeded_inputs(plan, n=N_SEEDED_INPUTS):
    shape = plan.input_specs[0][1]
    return [Tensor.from_numpy(naive_oracle.seeded_input(shape, k))
            for k in range(n)]


def test_criterion_1_placement_invariance(plan_store, agent, capsys):
    """Same plan, same input => bitwise-identical output on every placement."""
    store, plans = plan_store
    t0 = time.monotonic()
    checked = 0
    placements = (
        Placement(kind="local"),
        Placement(kind="remote", transport="inproc", endpoint=str(store)),
        Placement(kind="remote", transport="tcp",
                  endpoint=f"127.0.0.1:{agent.port}"),
    )
    for name, plan in plans.items():
        inputs = seeded_inputs(plan)
        sessions = [session_open(p, plan.plan_hash, store) for p in placements]
        try:
            for x in inputs:
                ref = sessions[0].infer([x]).outputs
                for s in sessions[1:]:
                    got = s.infer([x]).outputs
                    assert len(got) == len(ref)
                    for g, r in zip(got, ref):
                        assert g.dtype == r.dtype and g.shape == r.shape
                        assert g.data == r.data, name
                checked += 1
        finally:
            for s in sessions:
                s.close()
    elapsed = time.monotonic() - t0
    emit(capsys, "criterion-1 placement-invariance",
         checked == 3 * N_SEEDED_INPUTS and elapsed < 120,
         f"{checked} plan-input pairs x 3 placements, {elapsed:.1f}s")


def test_criterion_2_pass_equivalence(plan_store, capsys):
    """Every optimization subset preserves semantics bitwise; DCE is
    idempotent; the full pipeline fuses the expected op count."""
    t0 = time.monotonic()
    expected_fused = {"tiny-classifier": 2, "tiny-segmenter": 2, "tiny-video": 2}
    for name in corpus.MODEL_NAMES:
        ref_plan = corpus.compile_model(name, passes=())
        inputs = seeded_inputs(ref_plan)
        refs = [execute_plan(ref_plan, [x]).outputs[0].data for x in inputs]
        for subset in PASS_SUBSETS:
            plan = corpus.compile_model(name, passes=subset)
            for x, want in zip(inputs, refs):
                assert execute_plan(plan, [x]).outputs[0].data == want, \
                    (name, subset)
        full = corpus.compile_model(name, passes="all")
        for x, want in zip(inputs, refs):
            assert execute_plan(full, [x]).outputs[0].data == want, name
        fused = sum(op.kind.name.startswith("FUSED") for op in full.ops)
        assert fused == expected_fused[name], (name, fused)
        g = corpus.load_graph(name)
        once, twice = pass_dce(g), pass_dce(pass_dce(g))
        assert compile_graph(once, ()).plan_hash == compile_graph(twice, ()).plan_hash
    elapsed = time.monotonic() - t0
    emit(capsys, "criterion-2 pass-equivalence",
         elapsed < 120,
         f"3 graphs x {len(PASS_SUBSETS)} subsets x {N_SEEDED_INPUTS} inputs, "
         f"{elapsed:.1f}s")


def test_criterion_3_frame_economy(plan_store, capsys):
    """Exactly one request and one response frame per infer call."""
    store, plans = plan_store
    plan = plans["tiny-classifier"]
    placement = Placement(kind="remote", transport="inproc", endpoint=str(store))
    x = seeded_inputs(plan, 1)[0]
    with session_open(placement, plan.plan_hash, store) as session:
        counter = wire.CountingTransport(session._transport)
        session._transport = counter
        for _ in range(1_000):
            session.infer([x])
    ok = counter.requests_sent == 1_000 and counter.responses_received == 1_000
    emit(capsys, "criterion-3 frame-economy", ok,
         f"{counter.requests_sent} requests / {counter.responses_received} "
         "responses for 1000 infer calls")


def test_criterion_4_replay_arithmetic(capsys):
    """FPS arithmetic on injected stage constants."""
    slow = run_replay(inference_us=764_000, frame_count=60)
    bound = run_replay(inference_us=20_000, frame_count=100)
    mixed = run_replay(inference_us=100_000, network_oneway_us=10_000,
                       preprocess_us=300, postprocess_us=300, frame_count=100)
    ok = (abs(float(slow.fps) - 1.30) / 1.30 <= 0.015
          and bound.fps == 50
          and mixed.mean_end_to_end_us == 120_600
          and abs(float(mixed.fps) - 8.29) <= 0.005)
    emit(capsys, "criterion-4 replay-arithmetic", ok,
         f"fps: {float(slow.fps):.4f} / {float(bound.fps):.1f} / "
         f"{float(mixed.fps):.4f}")


def test_criterion_5_link_calibration(capsys):
    """Shaped-link delay hits the calibrated value and is linear in size."""
    link = wire.ShapedLink(2_000, 25_000_000)
    delay = wire.shaped_delay_micros(link, 4_214_784)
    calibrated = abs(delay - 170_591) / 170_591 <= 0.01

    sizes = np.linspace(100_000, 10_000_000, 10).astype(np.int64)
    delays = np.array([wire.shaped_delay_micros(link, int(n)) for n in sizes],
                      dtype=np.float64)
    slope, intercept = np.polyfit(sizes.astype(np.float64), delays, 1)
    predicted = slope * sizes + intercept
    ss_res = float(np.sum((delays - predicted) ** 2))
    ss_tot = float(np.sum((delays - delays.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    emit(capsys, "criterion-5 link-calibration", calibrated and r2 > 0.999,
         f"delay {delay}us (ref 170591us), R^2 {r2:.6f}")


def test_criterion_6_crossover_agreement(plan_store, capsys):
    """Measured offloading winner agrees with the analytic predicate in at
    least 24 of 25 grid cells."""
    store, _ = plan_store
    t0 = time.monotonic()
    base = Scenario(name="crossover", model="tiny-classifier", task="classify",
                    frame_count=1, seed=21, width=64, height=48)
    cells = run_crossover_study(
        base, store, local_speed=0.05,
        edge_speeds=[0.02, 0.05, 0.1, 0.25, 1.0],
        bandwidths_bps=[200_000, 1_000_000, 5_000_000, 25_000_000, 0],
        frames_per_cell=3)
    elapsed = time.monotonic() - t0
    agree = sum(c.agrees for c in cells)
    with capsys.disabled():
        print(crossover_table(cells), end="")
    emit(capsys, "criterion-6 crossover-agreement",
         agree >= 24 and len(cells) == 25 and elapsed < 300,
         f"{agree}/25 cells agree, {elapsed:.1f}s")


def test_criterion_7_power_accounting(plan_store, capsys):
    """Exact rational power arithmetic; offloading cuts robot-side power by
    at least 70%."""
    from edgeinfer.telemetry import PowerSample, avg_power
    exact = avg_power(PowerSample(0, 0), PowerSample(2_000_000, 10_000_000)) == 5 \
        and avg_power(PowerSample(500, 250), PowerSample(1_500, 1_000)) \
        == Fraction(750, 1_000)

    store, _ = plan_store
    t0 = time.monotonic()
    base = Scenario(name="power", model="tiny-classifier", task="classify",
                    frame_count=12, seed=33, width=64, height=48,
                    placement=Placement(kind="local", remote_speed_factor=0.25))
    result = power_study(base, store, sample_hz=50.0)
    elapsed = time.monotonic() - t0
    reduction = float(result.robot_reduction())
    with capsys.disabled():
        print(power_table(result), end="")
    emit(capsys, "criterion-7 power-accounting",
         exact and reduction >= 0.70 and elapsed < 60,
         f"robot-side reduction {reduction * 100:.1f}%, {elapsed:.1f}s")


def test_criterion_8_decoder_fuzz(capsys):
    """100,000 structured fuzz cases: decoders never crash and never allocate
    past the configured message cap."""
    t0 = time.monotonic()
    rng = random.Random(1234)
    decoders = (wire.decode_frame_bytes, wire.decode_request,
                wire.decode_response, wire.decode_plan_list)
    valid_frames = [
        wire.encode_frame(wire.Frame(wire.MsgType.PING, 1)),
        wire.encode_frame(wire.Frame(wire.MsgType.INFER_REQUEST, 2,
                                     (GOLDEN / "wire_request_60.bin").read_bytes())),
        wire.encode_frame(wire.Frame(wire.MsgType.ERROR, 3,
                                     wire.encode_error(ErrorCode.TIMEOUT, "t"))),
    ]
    crashes = 0
    for case in range(100_000):
        mode = case % 4
        if mode == 0:
            blob = rng.randbytes(rng.randrange(0, 120))
        elif mode == 1:  # bit-flip a valid frame
            blob = bytearray(rng.choice(valid_frames))
            for _ in range(rng.randrange(1, 4)):
                blob[rng.randrange(len(blob))] ^= 1 << rng.randrange(8)
            blob = bytes(blob)
        elif mode == 2:  # truncate or extend a valid frame
            base = rng.choice(valid_frames)
            blob = base[:rng.randrange(len(base) + 1)] + \
                rng.randbytes(rng.randrange(0, 8))
        else:  # valid header, hostile body length
            blob = struct.pack(wire.HEADER_FMT, wire.MAGIC, wire.PROTOCOL_VERSION,
                               rng.randrange(0, 256), rng.randrange(0, 2**64),
                               rng.randrange(0, 2**32)) + rng.randbytes(
                                   rng.randrange(0, 40))
        for decoder in decoders:
            try:
                decoder(blob)
            except EdgeInferError:
                pass
            except Exception:
                crashes += 1

    # the body-length cap is enforced from the 19-byte header alone,
    # before any body allocation
    huge = struct.pack(wire.HEADER_FMT, wire.MAGIC, wire.PROTOCOL_VERSION,
                       wire.MsgType.PING.value, 1, 2**32 - 1)
    capped = False
    try:
        wire.decode_frame_bytes(huge, max_message_bytes=1 << 20)
    except EdgeInferError as exc:
        capped = exc.code.name == "MESSAGE_TOO_LARGE"
    elapsed = time.monotonic() - t0
    emit(capsys, "criterion-8 decoder-fuzz",
         crashes == 0 and capped and elapsed < 120,
         f"100000 cases, {crashes} crashes, cap enforced, {elapsed:.1f}s")


def test_criterion_9_latency_accounting(plan_store, tmp_path, capsys):
    """Per-frame stage sums reconcile with end-to-end within 2 ms, and the
    summary FPS is exactly recomputable from the emitted frames.csv."""
    store, _ = plan_store
    scenario = Scenario(name="accounting", model="tiny-segmenter", task="segment",
                        frame_count=50, seed=8, width=64, height=48,
                        placement=Placement(kind="remote", transport="inproc",
                                            endpoint=str(store),
                                            shape_latency_us=1_000))
    report = run_pipeline(scenario, store)
    paths = emit_report(report, tmp_path)

    lines = paths["frames"].read_text().splitlines()
    header = lines[0].split(",")
    e2e_idx = header.index("end_to_end_us")
    stage_idx = [header.index(n) for n in header[1:-1]]  # all stages
    worst = 0
    latencies = []
    for line in lines[1:]:
        vals = [int(v) for v in line.split(",")]
        e2e = vals[e2e_idx]
        worst = max(worst, abs(e2e - sum(vals[i] for i in stage_idx)))
        latencies.append(e2e)
    recomputed = Fraction(len(latencies) * 1_000_000, sum(latencies))

    summary_lines = paths["summary"].read_text().splitlines()
    stored_fps = next(l.split(",")[1] for l in summary_lines if l.startswith("fps,"))
    ok = (report.accounting_ok and worst <= 2_000
          and recomputed == report.summary.fps
          and stored_fps == f"{float(recomputed):.6f}"
          and len(latencies) == 50)
    emit(capsys, "criterion-9 latency-accounting", ok,
         f"worst stage-sum gap {worst}us, fps {stored_fps} recomputed exactly")
