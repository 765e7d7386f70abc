"""Build script for the optional compiled rasterizer kernel.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes rendering faster.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "refdiag.raster._kernels",
                ["src/refdiag/raster/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the compiled kernel bit-identical
                # to the numpy fallback (no FMA surprises).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
