import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "adiabat.kernels._core",
                ["src/adiabat/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Without Cython the package still installs; the numpy fallback backend
    # is selected at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
