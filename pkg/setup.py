import numpy as np
from setuptools import setup
from setuptools.extension import Extension

# The compiled semi-Lagrangian kernel is optional: the package falls back to a
# pure-numpy implementation when the extension is absent (see annulus_rti.kernels).
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "annulus_rti._sl_kernel",
                ["src/annulus_rti/_sl_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
