"""Per-frame latency breakdown, FPS arithmetic, and energy-counter power.

Rates and powers are computed with exact rationals (Fraction); callers can
float() the result for display. Percentiles use the nearest-rank definition.
"""

from __future__ import annotations

import csv
import io
import math
import threading
import time
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from .core import EdgeInferError, ErrorCode

STAGE_FIELDS = (
    "acquire_us", "preprocess_us", "serialize_us", "network_us",
    "inference_us", "deserialize_us", "postprocess_us", "publish_us",
)

DEFAULT_ACCOUNTING_EPSILON_US = 2_000


@dataclass
class LatencyBreakdown:
    acquire_us: int = 0
    preprocess_us: int = 0
    serialize_us: int = 0
    network_us: int = 0
    inference_us: int = 0
    deserialize_us: int = 0
    postprocess_us: int = 0
    publish_us: int = 0
    end_to_end_us: int = 0

    def stage_sum(self) -> int:
        return sum(getattr(self, f) for f in STAGE_FIELDS)

    def accounting_ok(self, epsilon_us: int = DEFAULT_ACCOUNTING_EPSILON_US) -> bool:
        if self.end_to_end_us < max(getattr(self, f) for f in STAGE_FIELDS):
            return False
        return abs(self.end_to_end_us - self.stage_sum()) <= epsilon_us


@dataclass(frozen=True)
class PowerSample:
    t: int           # monotonic microseconds
    energy_uj: int   # cumulative microjoules


def fps_from_latencies(per_frame_us: list[int]) -> Fraction:
    """n * 10^6 / sum(per-frame latency)."""
    if not per_frame_us:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, "no frames recorded")
    return Fraction(len(per_frame_us) * 1_000_000, sum(per_frame_us))


def avg_power(first: PowerSample, last: PowerSample) -> Fraction:
    """ΔµJ / Δµs is exactly watts."""
    if last.t <= first.t or last.energy_uj < first.energy_uj:
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE,
            f"bad sample window: t {first.t}->{last.t}, E {first.energy_uj}->{last.energy_uj}",
        )
    return Fraction(last.energy_uj - first.energy_uj, last.t - first.t)


# ---------------------------------------------------------------------------
# energy providers

class EnergyProvider:
    def read(self) -> PowerSample:
        raise NotImplementedError


class FileEnergyProvider(EnergyProvider):
    """Reads '<t_us> <energy_uj>' from a text file that the producer
    atomically rewrites; mirrors a hardware counter without privileges."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def read(self) -> PowerSample:
        text = self.path.read_text()
        parts = text.split()
        if len(parts) != 2:
            raise EdgeInferError(
                ErrorCode.MALFORMED_FRAME, f"counter file '{self.path}' is malformed"
            )
        return PowerSample(int(parts[0]), int(parts[1]))


class SyntheticRampProvider(EnergyProvider):
    """E(t) = watts * t exactly; used for calibrated power tests."""

    def __init__(self, watts: Fraction | float):
        self.watts = Fraction(watts).limit_denominator(10**9)
        self._t0 = time.monotonic_ns()
        self._last_t = 0

    def read(self) -> PowerSample:
        t_us = (time.monotonic_ns() - self._t0) // 1000
        if t_us <= self._last_t:
            t_us = self._last_t + 1
        self._last_t = t_us
        energy = int(self.watts * t_us)
        return PowerSample(t_us, energy)


class ActivityEnergyProvider(EnergyProvider):
    """Integrates busy/idle power over wall time; the workload flips the
    busy flag around its compute sections."""

    def __init__(self, busy_watts: float, idle_watts: float):
        self.busy = Fraction(busy_watts).limit_denominator(10**9)
        self.idle = Fraction(idle_watts).limit_denominator(10**9)
        self._t0 = time.monotonic_ns()
        self._mark_us = 0
        self._energy = Fraction(0)
        self._is_busy = False
        self._last_t = 0
        self._lock = threading.Lock()

    def _now_us(self) -> int:
        return (time.monotonic_ns() - self._t0) // 1000

    def _advance(self, now_us: int):
        rate = self.busy if self._is_busy else self.idle
        self._energy += rate * (now_us - self._mark_us)
        self._mark_us = now_us

    def set_busy(self, busy: bool):
        with self._lock:
            self._advance(self._now_us())
            self._is_busy = busy

    def read(self) -> PowerSample:
        with self._lock:
            now = self._now_us()
            if now <= self._last_t:
                now = self._last_t + 1
            self._advance(now)
            self._last_t = now
            return PowerSample(now, int(self._energy))


class PowerSampler:
    """Polls a provider at a fixed rate on a background thread."""

    def __init__(self, provider: EnergyProvider, rate_hz: float = 10.0):
        self.provider = provider
        self.interval_s = 1.0 / rate_hz
        self.samples: list[PowerSample] = []
        self.errors = 0
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        while not self._stop.is_set():
            try:
                self.samples.append(self.provider.read())
            except Exception:
                self.errors += 1
            self._stop.wait(self.interval_s)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        try:
            self.samples.append(self.provider.read())
        except Exception:
            self.errors += 1

    def average_watts(self) -> Fraction:
        if len(self.samples) < 2:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, "not enough power samples")
        return avg_power(self.samples[0], self.samples[-1])


# ---------------------------------------------------------------------------
# collection and summaries

def nearest_rank(sorted_values: list[int], pct: float) -> int:
    """Nearest-rank percentile over a pre-sorted list."""
    if not sorted_values:
        raise EdgeInferError(ErrorCode.INVALID_SHAPE, "empty sample set")
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass
class StageStats:
    mean_us: float
    p50_us: int
    p95_us: int
    max_us: int
    share: float  # fraction of mean end-to-end


@dataclass
class Summary:
    frame_count: int
    fps: Fraction
    mean_end_to_end_us: float
    stages: dict[str, StageStats]


class Collector:
    """Single-writer per-frame breakdown collector."""

    def __init__(self):
        self.frames: list[LatencyBreakdown] = []

    def record_frame(self, breakdown: LatencyBreakdown):
        self.frames.append(breakdown)

    def summarize(self) -> Summary:
        if not self.frames:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, "no frames recorded")
        e2e = [f.end_to_end_us for f in self.frames]
        mean_e2e = sum(e2e) / len(e2e)
        stages: dict[str, StageStats] = {}
        for name in STAGE_FIELDS + ("end_to_end_us",):
            values = sorted(getattr(f, name) for f in self.frames)
            mean = sum(values) / len(values)
            stages[name] = StageStats(
                mean_us=mean,
                p50_us=nearest_rank(values, 50),
                p95_us=nearest_rank(values, 95),
                max_us=values[-1],
                share=(mean / mean_e2e) if mean_e2e else 0.0,
            )
        return Summary(len(self.frames), fps_from_latencies(e2e), mean_e2e, stages)


SUMMARY_COLUMNS = ("stage", "mean_us", "p50_us", "p95_us", "max_us", "share")


def summary_csv(summary: Summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("frame_count", summary.frame_count))
    writer.writerow(("fps", f"{float(summary.fps):.6f}"))
    writer.writerow(SUMMARY_COLUMNS)
    for name, st in summary.stages.items():
        writer.writerow((name, f"{st.mean_us:.3f}", st.p50_us, st.p95_us,
                         st.max_us, f"{st.share:.6f}"))
    return buf.getvalue()


def summary_table(summary: Summary) -> str:
    lines = [
        f"frames: {summary.frame_count}   fps: {float(summary.fps):.4f}   "
        f"mean end-to-end: {summary.mean_end_to_end_us / 1000.0:.3f} ms",
        f"{'stage':<16}{'mean_us':>12}{'p50_us':>10}{'p95_us':>10}{'max_us':>10}{'share':>9}",
    ]
    for name, st in summary.stages.items():
        lines.append(
            f"{name:<16}{st.mean_us:>12.1f}{st.p50_us:>10}{st.p95_us:>10}"
            f"{st.max_us:>10}{st.share:>9.3f}"
        )
    return "\n".join(lines) + "\n"


def frames_csv(frames: list[LatencyBreakdown]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(LatencyBreakdown)]
    writer.writerow(["frame"] + names)
    for i, fr in enumerate(frames):
        writer.writerow([i] + [getattr(fr, n) for n in names])
    return buf.getvalue()
