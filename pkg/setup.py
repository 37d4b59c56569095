"""Build script: compiles the optional Gauss-Seidel sweep extension.

The package works without the extension (a pure-Python kernel is selected
at import time), so any build failure here downgrades to a warning instead
of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "pathprob.kernels._sweep_cy",
                ["src/pathprob/kernels/_sweep_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # noqa: BLE001 - fall back to the pure kernel
    print(f"pathprob: skipping compiled sweep kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
