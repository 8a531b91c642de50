import sys

from setuptools import setup

# The compiled kernel core is optional: the package falls back to the pure
# numpy kernels at import time if the extension is missing. Build failures
# therefore degrade gracefully instead of blocking installation.
ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "edgeinfer.kernels._fast",
                sources=["src/edgeinfer/kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: no FMA contraction, so the compiled
                # kernels are bit-identical to the pure numpy fallback.
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover
    print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
