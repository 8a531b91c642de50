"""Committed model corpus: three small graphs covering the classification,
segmentation, and video task shapes, with seeded weight files."""

from __future__ import annotations

from pathlib import Path

from ..graphlang import Graph, parse_graph
from ..plan import ModelPlan, compile_graph
from ..store import save_plan

CORPUS_DIR = Path(__file__).parent

MODEL_NAMES = ("tiny-classifier", "tiny-segmenter", "tiny-video")

_FILES = {
    "tiny-classifier": "tiny_classifier.g",
    "tiny-segmenter": "tiny_segmenter.g",
    "tiny-video": "tiny_video.g",
}


def load_graph(name: str) -> Graph:
    path = CORPUS_DIR / _FILES[name]
    return parse_graph(path.read_text(), base_dir=CORPUS_DIR)


def compile_model(name: str, passes="all") -> ModelPlan:
    return compile_graph(load_graph(name), passes)


def build_store(directory, passes="all") -> dict[str, ModelPlan]:
    """Compile the whole corpus into a plan store directory."""
    plans = {}
    for name in MODEL_NAMES:
        plan = compile_model(name, passes)
        save_plan(plan, directory, name)
        plans[name] = plan
    return plans
