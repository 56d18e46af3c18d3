"""Build script.

The compiled kernels are optional: if Cython or a C compiler is missing the
package installs anyway and falls back to the numpy reference backend.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    HAVE_CYTHON = True
except ImportError:
    HAVE_CYTHON = False

extensions = []
if HAVE_CYTHON:
    ext = Extension(
        "visitsolve._kernels._fast",
        sources=["src/visitsolve/_kernels/_fast.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off: the reference backend must agree to ~1e-15, so
        # the compiler must not fuse multiply-adds behind our back.
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    extensions = cythonize([ext], language_level=3)

setup(ext_modules=extensions)
