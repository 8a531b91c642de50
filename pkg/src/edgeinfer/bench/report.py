"""Report emission: per-frame CSV, summary CSV, aligned text table."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..telemetry import frames_csv, summary_csv, summary_table
from .pipeline import BenchReport


def scenario_echo(report: BenchReport) -> str:
    s = report.scenario
    p = s.placement
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name", s.name))
    w.writerow(("model", s.model))
    w.writerow(("task", s.task))
    w.writerow(("placement", p.kind))
    w.writerow(("transport", p.transport if p.kind == "remote" else "-"))
    w.writerow(("seed", s.seed))
    w.writerow(("frames", report.summary.frame_count))
    w.writerow(("errors", report.error_count))
    w.writerow(("accounting_ok", report.accounting_ok))
    w.writerow(("sequential", report.acquire_publish_sequential))
    w.writerow(("equivalence_digest", report.equivalence_digest))
    return buf.getvalue()


def emit_report(report: BenchReport, out_dir: str | Path) -> dict[str, Path]:
    """Write frames.csv, summary.csv, and summary.txt; idempotent and
    byte-deterministic for a given report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "frames": out / "frames.csv",
        "summary": out / "summary.csv",
        "table": out / "summary.txt",
        "results": out / "results.log",
    }
    paths["frames"].write_text(frames_csv(report.frames))
    paths["summary"].write_text(scenario_echo(report) + summary_csv(report.summary))
    paths["table"].write_text(summary_table(report.summary))
    paths["results"].write_text("\n".join(report.results) + "\n")
    return paths


def invariants_pass(report: BenchReport) -> bool:
    return report.accounting_ok and report.acquire_publish_sequential \
        and report.error_count == 0
