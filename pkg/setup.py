import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "sqfit._radial_cy",
                ["src/sqfit/_radial_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-Python fallback kernel is used when the extension is unavailable
    ext_modules = []

setup(ext_modules=ext_modules)
