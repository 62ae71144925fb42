"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python kernel module is
selected at import time), so the build degrades gracefully when Cython or
a C compiler is unavailable.  Set SKEWLAB_SKIP_EXT=1 to force a pure-Python
install.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SKEWLAB_SKIP_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "skewlab._ckernels",
                    ["src/skewlab/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # Both flags keep the compiled kernels bit-identical to
                    # the pure-Python ones: no fused multiply-add, and no
                    # fusing cos/sin pairs into glibc sincos (whose results
                    # can differ from separate cos/sin calls by 1 ulp).
                    extra_compile_args=["-O3", "-ffp-contract=off",
                                        "-fno-builtin-sin",
                                        "-fno-builtin-cos",
                                        "-fno-builtin-sincos"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
