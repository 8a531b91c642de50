#!/usr/bin/env python3
"""Time the compiled kernel extension against the pure-numpy fallback.

The two backends are required to be bitwise identical (the test suite checks
that); this script reports how much wall time the extension saves. Run from
the repository root:

    python3 benchmarks/compare_backends.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from edgeinfer import kernels
from edgeinfer.kernels import pure

CASES = (
    ("matmul 64x64", "matmul",
     lambda rng: (rng.standard_normal((64, 64)).astype(np.float32),
                  rng.standard_normal((64, 64)).astype(np.float32))),
    ("matmul 16x256 @ 256x10", "matmul",
     lambda rng: (rng.standard_normal((16, 256)).astype(np.float32),
                  rng.standard_normal((256, 10)).astype(np.float32))),
    ("conv2d 8c 32x32 3x3", "conv2d",
     lambda rng: (rng.standard_normal((1, 8, 32, 32)).astype(np.float32),
                  rng.standard_normal((8, 8, 3, 3)).astype(np.float32), 1, 1)),
    ("conv2d 3c 64x64 s2", "conv2d",
     lambda rng: (rng.standard_normal((1, 3, 64, 64)).astype(np.float32),
                  rng.standard_normal((16, 3, 3, 3)).astype(np.float32), 2, 1)),
    ("maxpool 16c 64x64", "maxpool2d",
     lambda rng: (rng.standard_normal((1, 16, 64, 64)).astype(np.float32),
                  2, 2, 2, 0)),
)


def bench(fn, args, repeats: int) -> float:
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    opts = parser.parse_args()

    if kernels.BACKEND != "compiled":
        parser.exit(1, "compiled extension not available "
                       "(is EDGEINFER_PURE set, or did the build fail?)\n")

    rng = np.random.default_rng(0)
    print(f"{'case':<26}{'compiled':>12}{'pure':>12}{'speedup':>10}")
    for label, name, make_args in CASES:
        args = make_args(rng)
        fast = bench(getattr(kernels, name), args, opts.repeats)
        slow = bench(getattr(pure, name), args, opts.repeats)
        assert getattr(kernels, name)(*args).tobytes() == \
            getattr(pure, name)(*args).tobytes(), label
        print(f"{label:<26}{fast * 1e3:>10.3f}ms{slow * 1e3:>10.3f}ms"
              f"{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
