"""Frame sources and the pre/post-processing stages.

The bilinear resize uses corner-aligned sampling with a fixed tap order
(horizontal lerp first, then vertical), all in f32, so outputs are
host-independent and bit-stable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..core import EdgeInferError, ErrorCode

_F32 = np.float32


class SyntheticFrames:
    """Seeded pseudo-random U8 frames (H, W, 3)."""

    def __init__(self, seed: int, width: int = 1280, height: int = 720):
        self.width = width
        self.height = height
        self._rng = np.random.default_rng(seed)

    def next_frame(self) -> np.ndarray:
        return self._rng.integers(0, 256, size=(self.height, self.width, 3),
                                  dtype=np.uint8)


class DirectoryFrames:
    """Raw (H, W, 3) u8 frame files, consumed in sorted order, cycling."""

    def __init__(self, directory: str | Path, width: int, height: int):
        self.paths = sorted(Path(directory).glob("*.raw"))
        if not self.paths:
            raise EdgeInferError(
                ErrorCode.MODEL_NOT_FOUND, f"no .raw frames in '{directory}'"
            )
        self.width = width
        self.height = height
        self._idx = 0

    def next_frame(self) -> np.ndarray:
        path = self.paths[self._idx % len(self.paths)]
        self._idx += 1
        data = np.frombuffer(path.read_bytes(), dtype=np.uint8)
        expected = self.height * self.width * 3
        if data.size != expected:
            raise EdgeInferError(
                ErrorCode.INVALID_SHAPE,
                f"frame '{path.name}' has {data.size} bytes, expected {expected}",
            )
        return data.reshape(self.height, self.width, 3)


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize of an (H, W, C) image to f32."""
    h, w = img.shape[:2]
    src = img.astype(_F32)
    ys = (np.arange(out_h, dtype=_F32) * _F32((h - 1) / (out_h - 1))
          if out_h > 1 else np.zeros(1, dtype=_F32))
    xs = (np.arange(out_w, dtype=_F32) * _F32((w - 1) / (out_w - 1))
          if out_w > 1 else np.zeros(1, dtype=_F32))
    y0 = np.minimum(ys.astype(np.int64), h - 2) if h > 1 else np.zeros(out_h, np.int64)
    x0 = np.minimum(xs.astype(np.int64), w - 2) if w > 1 else np.zeros(out_w, np.int64)
    fy = (ys - y0.astype(_F32))[:, None, None]
    fx = (xs - x0.astype(_F32))[None, :, None]
    p00 = src[y0[:, None], x0[None, :]]
    p01 = src[y0[:, None], (x0 + (1 if w > 1 else 0))[None, :]]
    p10 = src[(y0 + (1 if h > 1 else 0))[:, None], x0[None, :]]
    p11 = src[(y0 + (1 if h > 1 else 0))[:, None], (x0 + (1 if w > 1 else 0))[None, :]]
    top = p00 + (p01 - p00) * fx
    bottom = p10 + (p11 - p10) * fx
    return top + (bottom - top) * fy


def preprocess(frame: np.ndarray, input_shape: tuple[int, ...],
               mean: float, std: float) -> np.ndarray:
    """Resize + scale to [0,1] + per-channel normalize + NCHW layout.

    For video-shaped inputs (channels = 16 frames x 3) the current frame is
    replicated across the temporal slots.
    """
    n, c, h, w = input_shape
    resized = bilinear_resize(frame, h, w)  # (h, w, 3) f32
    scaled = (resized / _F32(255.0) - _F32(mean)) / _F32(std)
    chw = np.ascontiguousarray(scaled.transpose(2, 0, 1))  # (3, h, w)
    if c == 3:
        return chw.reshape(1, 3, h, w)
    if c % 3 == 0:
        return np.ascontiguousarray(np.tile(chw, (c // 3, 1, 1))).reshape(1, c, h, w)
    raise EdgeInferError(
        ErrorCode.INVALID_SHAPE, f"cannot map an RGB frame to {c} input channels"
    )


def postprocess(task: str, output: np.ndarray) -> np.ndarray:
    """Task-specific result extraction: top-1 class or per-pixel labels."""
    if task in ("classify", "video"):
        return np.argmax(output, axis=-1).astype(np.int64)
    if task == "segment":
        # (n, classes, h, w) -> per-pixel label map
        return np.argmax(output, axis=1).astype(np.int64)
    raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"unknown task '{task}'")
