import random
import time
from fractions import Fraction

import pytest

from conftest import GOLDEN
from edgeinfer.core import EdgeInferError, ErrorCode
from edgeinfer.telemetry import (ActivityEnergyProvider, Collector,
                                 FileEnergyProvider, LatencyBreakdown,
                                 PowerSample, PowerSampler,
                                 SyntheticRampProvider, avg_power, frames_csv,
                                 fps_from_latencies, nearest_rank, summary_csv)


# ---------------------------------------------------------------------------
# exact-rational rate arithmetic

def test_fps_exact_values():
    assert fps_from_latencies([1_000_000]) == 1
    assert fps_from_latencies([764_000] * 60) == Fraction(1_000_000, 764_000)
    assert float(fps_from_latencies([764_000] * 60)) == pytest.approx(1.3089, abs=5e-5)
    mixed = [100_000] * 9 + [1_000_000]
    assert fps_from_latencies(mixed) == Fraction(10 * 1_000_000, 1_900_000)
    assert float(fps_from_latencies(mixed)) == pytest.approx(5.263, abs=5e-4)


def test_fps_count_invariance():
    # k copies of the same latency always give 10^6 / x exactly
    for x in (1, 7, 120_600, 764_000):
        for k in (1, 3, 50):
            assert fps_from_latencies([x] * k) == Fraction(1_000_000, x)


def test_fps_empty_rejected():
    with pytest.raises(EdgeInferError) as exc:
        fps_from_latencies([])
    assert exc.value.code is ErrorCode.INVALID_SHAPE


def test_avg_power_exact():
    assert avg_power(PowerSample(0, 0), PowerSample(2_000_000, 10_000_000)) == 5
    assert avg_power(PowerSample(100, 50), PowerSample(200, 50)) == 0


def test_avg_power_preconditions():
    with pytest.raises(EdgeInferError):
        avg_power(PowerSample(10, 0), PowerSample(10, 5))      # zero window
    with pytest.raises(EdgeInferError):
        avg_power(PowerSample(20, 0), PowerSample(10, 5))      # reversed time
    with pytest.raises(EdgeInferError):
        avg_power(PowerSample(0, 100), PowerSample(10, 50))    # counter went down


def test_avg_power_interval_splitting():
    # power over [a,c] is the duration-weighted mean of [a,b] and [b,c]
    rng = random.Random(17)
    for _ in range(100):
        t1 = rng.randrange(1, 10**6)
        t2 = t1 + rng.randrange(1, 10**6)
        e1 = rng.randrange(0, 10**9)
        e2 = e1 + rng.randrange(0, 10**9)
        a, b, c = PowerSample(0, 0), PowerSample(t1, e1), PowerSample(t2, e2)
        lhs = avg_power(a, c) * (t2 - 0)
        rhs = avg_power(a, b) * t1 + avg_power(b, c) * (t2 - t1)
        assert lhs == rhs


# ---------------------------------------------------------------------------
# providers and sampler

def test_synthetic_ramp_exact_watts():
    provider = SyntheticRampProvider(Fraction(19, 2))  # 9.5 W
    s0 = provider.read()
    time.sleep(0.02)
    s1 = provider.read()
    watts = avg_power(s0, s1)
    # exact up to the int() floor on cumulative energy
    assert abs(watts - Fraction(19, 2)) < Fraction(1, s1.t - s0.t) * 2


def test_file_provider_parse(tmp_path):
    p = tmp_path / "counter"
    p.write_text("12345 67890\n")
    sample = FileEnergyProvider(p).read()
    assert sample == PowerSample(12345, 67890)


@pytest.mark.parametrize("text", ["", "12", "1 2 3", "x y"])
def test_file_provider_malformed(tmp_path, text):
    p = tmp_path / "counter"
    p.write_text(text)
    with pytest.raises((EdgeInferError, ValueError)):
        FileEnergyProvider(p).read()


def test_activity_provider_busy_idle_integration():
    provider = ActivityEnergyProvider(busy_watts=10.0, idle_watts=1.0)
    s0 = provider.read()
    time.sleep(0.03)                       # idle stretch
    provider.set_busy(True)
    time.sleep(0.03)                       # busy stretch
    provider.set_busy(False)
    s1 = provider.read()
    watts = float(avg_power(s0, s1))
    assert 1.0 < watts < 10.0              # strictly between the two rates


def test_power_sampler_average(tmp_path):
    provider = SyntheticRampProvider(3.0)
    with PowerSampler(provider, rate_hz=50.0) as sampler:
        time.sleep(0.1)
    assert len(sampler.samples) >= 2
    assert float(sampler.average_watts()) == pytest.approx(3.0, abs=0.01)


def test_power_sampler_needs_samples():
    sampler = PowerSampler(SyntheticRampProvider(1.0))
    with pytest.raises(EdgeInferError):
        sampler.average_watts()


# ---------------------------------------------------------------------------
# percentiles and summaries

def test_nearest_rank_examples():
    vals = list(range(1, 101))
    assert nearest_rank(vals, 50) == 50
    assert nearest_rank(vals, 95) == 95
    assert nearest_rank(vals, 100) == 100
    assert nearest_rank([7], 95) == 7
    assert nearest_rank([1, 2], 50) == 1


def test_nearest_rank_vs_sort_oracle():
    rng = random.Random(5)
    for _ in range(50):
        vals = sorted(rng.randrange(0, 1000) for _ in range(rng.randrange(1, 40)))
        for pct in (1, 50, 95, 99, 100):
            import math
            want = vals[max(1, math.ceil(pct / 100 * len(vals))) - 1]
            assert nearest_rank(vals, pct) == want


def test_collector_single_frame_summary():
    c = Collector()
    c.record_frame(LatencyBreakdown(inference_us=10_000, end_to_end_us=10_000))
    s = c.summarize()
    assert s.frame_count == 1
    assert s.fps == 100
    assert s.stages["inference_us"].share == 1.0
    assert s.stages["end_to_end_us"].p50_us == 10_000


def test_collector_identical_frames():
    c = Collector()
    for _ in range(2):
        c.record_frame(LatencyBreakdown(acquire_us=100, inference_us=900,
                                        end_to_end_us=1_000))
    s = c.summarize()
    st = s.stages["inference_us"]
    assert st.mean_us == st.p50_us == st.p95_us == st.max_us == 900
    assert st.share == pytest.approx(0.9)


def test_collector_empty_rejected():
    with pytest.raises(EdgeInferError):
        Collector().summarize()


def golden_breakdown_rows(n=1000):
    """Regenerate the frozen telemetry fixture's frame population."""
    import numpy as np

    from edgeinfer.telemetry import STAGE_FIELDS
    rng = np.random.default_rng(7)
    rows = []
    for _ in range(n):
        stages = rng.integers(50, 20_000, size=8)
        e2e = int(stages.sum()) + int(rng.integers(0, 1_500))
        rows.append(LatencyBreakdown(**dict(zip(STAGE_FIELDS, map(int, stages))),
                                     end_to_end_us=e2e))
    return rows


def test_summary_csv_matches_golden():
    c = Collector()
    for row in golden_breakdown_rows():
        c.record_frame(row)
    got = summary_csv(c.summarize())
    assert got == (GOLDEN / "telemetry_summary_1000.csv").read_text()


def test_summary_csv_shape():
    c = Collector()
    c.record_frame(LatencyBreakdown(inference_us=5, end_to_end_us=5))
    lines = summary_csv(c.summarize()).splitlines()
    assert lines[0] == "frame_count,1"
    assert lines[1].startswith("fps,")
    assert lines[2] == "stage,mean_us,p50_us,p95_us,max_us,share"
    assert len(lines) == 3 + 9  # 8 stages + end_to_end_us


def test_frames_csv_format():
    rows = [LatencyBreakdown(acquire_us=1, end_to_end_us=10),
            LatencyBreakdown(acquire_us=2, end_to_end_us=20)]
    lines = frames_csv(rows).splitlines()
    assert lines[0] == ("frame,acquire_us,preprocess_us,serialize_us,network_us,"
                        "inference_us,deserialize_us,postprocess_us,publish_us,"
                        "end_to_end_us")
    assert lines[1] == "0,1,0,0,0,0,0,0,0,10"
    assert lines[2] == "1,2,0,0,0,0,0,0,0,20"


# ---------------------------------------------------------------------------
# accounting invariant

def test_accounting_epsilon_boundary():
    b = LatencyBreakdown(inference_us=10_000, end_to_end_us=12_000)
    assert b.accounting_ok(epsilon_us=2_000)
    assert not b.accounting_ok(epsilon_us=1_999)


def test_accounting_rejects_e2e_below_largest_stage():
    b = LatencyBreakdown(inference_us=10_000, end_to_end_us=9_999)
    assert not b.accounting_ok(epsilon_us=10**9)


def test_stage_sum():
    b = LatencyBreakdown(acquire_us=1, preprocess_us=2, serialize_us=3,
                         network_us=4, inference_us=5, deserialize_us=6,
                         postprocess_us=7, publish_us=8, end_to_end_us=36)
    assert b.stage_sum() == 36
    assert b.accounting_ok(0)
