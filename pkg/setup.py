"""Build script: compiles the hot-loop kernels when Cython is available.

The package works without the extension (a pure-Python backend is selected
at import time), but the Monte Carlo / enumeration suites are only fast with
the compiled module.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "lrising._kernels",
                ["src/lrising/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
