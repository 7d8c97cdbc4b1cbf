import os

from setuptools import setup

ext_modules = []
if not os.environ.get("YIELDSIM_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/yieldsim/_kernels/_sat.pyx"],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython: install the pure-Python kernels only.
        ext_modules = []

setup(ext_modules=ext_modules)
