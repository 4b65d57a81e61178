import os

from setuptools import Extension, setup

# LARCHKIT_PURE=1 skips the compiled kernels; the package then runs on the
# pure-Python fallback selected at import time.
ext_modules = []
if os.environ.get("LARCHKIT_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("larchkit._fastcore", ["src/larchkit/_fastcore.pyx"])],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
