"""Build glue for the optional compiled text kernel.

The package works without the extension (pure-Python fallback is selected at
import time), so a failed compile downgrades to a warning instead of aborting
the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, cythonize failure, ...
            warnings.warn(f"compiled text kernel skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled text kernel skipped: {exc}")


def extensions():
    import os

    if not os.path.exists("src/promptpad/textcore/_speed.pyx"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "promptpad.textcore._speed",
                ["src/promptpad/textcore/_speed.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
