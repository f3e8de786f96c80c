"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure-numpy fallbacks are selected
at import time); the build therefore degrades gracefully when Cython or a
C compiler is unavailable.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mixlinreg._ckernels",
                ["src/mixlinreg/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:  # pragma: no cover - build-env dependent
    warnings.warn(f"building without compiled kernels: {exc}")

setup(ext_modules=ext_modules)
