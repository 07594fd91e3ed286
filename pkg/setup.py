"""Build script: compiles the optional fast kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a failed extension build downgrades to a warning instead
of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext = Extension(
        "prunekit._kernels",
        ["src/prunekit/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off: kernel results must be bit-identical to the
        # pure-numpy fallback, so FMA contraction is disabled.
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: skipping compiled kernels ({exc}); numpy fallback will be used", file=sys.stderr)

setup(ext_modules=ext_modules)
