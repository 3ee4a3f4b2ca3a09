"""Build script for the optional compiled kernel module.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed compile should not make the install unusable.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("coshare.kernels._native", ["src/coshare/kernels/_native.pyx"])],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
