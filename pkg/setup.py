"""Build script for the optional compiled kernel backend.

The package is fully functional without the extension (a pure-Python
backend is selected at import time), so a failed compilation only costs
speed.  -ffp-contract=off keeps the compiled kernels bit-identical to
the pure backend by forbidding FMA contraction.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: compiled kernels skipped ({exc}); "
                  "falling back to the pure-Python backend", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to the pure-Python backend", file=sys.stderr)


ext = Extension(
    "pitomo._kernels._fast",
    sources=["src/pitomo/_kernels/_fast.pyx"],
    extra_compile_args=["-O2", "-ffp-contract=off"],
)

try:
    from Cython.Build import cythonize
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    print("warning: Cython not available; compiled kernels skipped",
          file=sys.stderr)
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
