import os

from setuptools import Extension, setup

# The compiled kernels are an optional speedup.  If Cython (or a C
# compiler) is unavailable the package installs pure-Python and selects
# the numpy fallback at import time.
ext_modules = []
if os.environ.get("SPECSMOOTH_NO_EXT", "") not in ("1", "true"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "specsmooth._kernels_cy",
                    ["src/specsmooth/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # contraction off: compiled results must match the
                    # numpy fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
