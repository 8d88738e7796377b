"""Build the optional compiled kernels.

If Cython or a C compiler is unavailable the package still installs and
``loma.kernels`` falls back to the numpy implementation.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("LOMA_NO_EXTENSION") != "1":
    try:
        import numpy
        import scipy  # noqa: F401  (cython_lapack .pxd at build time)
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "loma._kernels",
                    ["src/loma/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
