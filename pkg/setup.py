"""Build the optional compiled kernels.

The package works without them: ``ddol.kernels`` falls back to the
pure-Python implementation when the extension is missing.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("DDOL_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:  # pragma: no cover - build without Cython
        sys.stderr.write("Cython/numpy unavailable; skipping ddol._ckernels\n")
    else:
        compile_args = ["-O3", "-ffp-contract=off", "-fno-fast-math"]
        link_args = []
        if sys.platform.startswith("linux"):
            compile_args.append("-fopenmp")
            link_args.append("-fopenmp")
        ext_modules = cythonize(
            [
                Extension(
                    "ddol._ckernels",
                    ["src/ddol/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=compile_args,
                    extra_link_args=link_args,
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
