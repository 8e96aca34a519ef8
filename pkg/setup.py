"""Build the optional compiled filter kernels.

The package works without them (numpy fallback selected at import), so a
missing compiler or Cython only costs speed, not functionality.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"compiled kernels skipped ({exc}); using the numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"compiled kernels skipped ({exc}); using the numpy fallback")


ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/ssmsmc/_kernels/_core.pyx",
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    warnings.warn("Cython not available; installing with the numpy fallback only")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
