"""Build the optional Cython labelling kernel.

The package works without it: ``dmdseg.kernels`` falls back to the pure
Python implementation when the compiled module cannot be imported.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "dmdseg._ccl",
                ["src/dmdseg/_ccl.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
