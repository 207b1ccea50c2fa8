"""Build hook for the optional compiled kernel.

The package works without it (``levyqueue._kernel_py`` is used instead), so a
missing compiler or Cython only produces a warning.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernel not built ({exc}); using pure Python", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc})", file=sys.stderr)


def extensions():
    if os.environ.get("LEVYQUEUE_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "levyqueue._kernel",
                ["src/levyqueue/_kernel.pyx"],
                # keep libm calls and rounding identical to the Python mirror
                extra_compile_args=["-ffp-contract=off", "-fno-builtin"],
            )
        ],
        compiler_directives={"language_level": 3},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
