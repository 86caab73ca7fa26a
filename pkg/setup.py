"""Build script for the optional compiled pair-sampling kernel.

The package is pure Python apart from one Cython extension holding the
Monte Carlo hot loop. If Cython or a C compiler is unavailable the build
proceeds without the extension and the package falls back to the
vectorized numpy kernel at import time.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "modebell._kernel._pairsampler",
                ["src/modebell/_kernel/_pairsampler.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
