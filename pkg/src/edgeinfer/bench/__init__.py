"""Benchmark harness: sequential frame pipeline, replay arithmetic,
crossover study, and power measurement."""

from .pipeline import BenchReport, run_pipeline
from .replay import run_replay
from .scenario import Scenario, load_scenario

__all__ = ["BenchReport", "Scenario", "load_scenario", "run_pipeline", "run_replay"]
