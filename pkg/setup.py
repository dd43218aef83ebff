"""Build script: compiles the optional enumeration kernel.

The package is pure Python plus one Cython extension holding the hot
configuration-enumeration loops.  The extension is strictly optional: if
Cython or a C compiler is missing the build falls back to the NumPy
implementation in thermoform._kernel_py and everything still works (the
compiled and pure paths expose the same block-level API).
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # compiler missing, etc.
            sys.stderr.write(
                "warning: compiled kernel skipped (%s); "
                "falling back to the NumPy kernel\n" % exc
            )

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            sys.stderr.write(
                "warning: building %s failed (%s); "
                "falling back to the NumPy kernel\n" % (ext.name, exc)
            )


ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "thermoform._kernel",
                ["src/thermoform/_kernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    sys.stderr.write("warning: Cython not available; using the NumPy kernel\n")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
