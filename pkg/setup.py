"""Build script for the optional Cython assignment kernel.

The package is fully functional without the extension: nbrecon.assignment
falls back to the pure-Python solver when the compiled module is missing,
so any build failure here is deliberately non-fatal.
"""

import os

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    if os.path.exists("src/nbrecon/_hungarian.pyx"):
        ext_modules = cythonize(
            [
                Extension(
                    "nbrecon._hungarian",
                    ["src/nbrecon/_hungarian.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
except ImportError:
    pass

setup(ext_modules=ext_modules)
