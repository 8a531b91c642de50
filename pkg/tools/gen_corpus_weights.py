#!/usr/bin/env python3
"""Regenerate the seeded corpus weight files. Run from the repo root; the
outputs are committed, so this only needs rerunning if shapes change."""

import hashlib
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "edgeinfer" / "corpus"

WEIGHTS = {
    "tiny_classifier_w1.bin": (8, 3, 3, 3),
    "tiny_classifier_w2.bin": (16, 8, 3, 3),
    "tiny_classifier_w3.bin": (16, 10),
    "tiny_segmenter_w1.bin": (8, 3, 3, 3),
    "tiny_segmenter_w2.bin": (8, 8, 3, 3),
    "tiny_segmenter_w3.bin": (5, 8, 3, 3),
    "tiny_video_w1.bin": (8, 48, 3, 3),
    "tiny_video_w2.bin": (16, 8, 3, 3),
    "tiny_video_w3.bin": (16, 10),
}


def main():
    for name, shape in WEIGHTS.items():
        # per-file seed derived from the name, so adding files never
        # perturbs existing ones
        seed = int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "little")
        rng = np.random.default_rng(seed)
        values = (rng.standard_normal(shape) * 0.1).astype("<f4")
        (OUT / name).write_bytes(values.tobytes())
        print(f"{name}: {values.size} floats, seed {seed}")


if __name__ == "__main__":
    main()
