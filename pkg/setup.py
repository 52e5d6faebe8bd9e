"""Build script for the optional compiled solver kernel.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes backward induction faster on large
models.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "gridrestore._kernels._cykernel",
                ["src/gridrestore/_kernels/_cykernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
