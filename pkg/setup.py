"""Build script for the optional compiled descent kernels.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed build is tolerated rather than fatal.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bimod._kernels_c",
                ["src/bimod/_kernels_c.pyx"],
                # fp-contract off: results must be bit-identical to the
                # pure-Python kernel, so no FMA fusion
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
