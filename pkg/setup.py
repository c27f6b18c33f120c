"""Builds the optional compiled root-finding kernel.

The package works without the extension: arcm._kernels falls back to the
pure numpy implementation when the compiled module is absent.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/arcm/_kernels/_secular.pyx"],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
