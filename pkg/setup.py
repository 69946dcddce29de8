import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernel is optional: foundry.stats.tdigest falls back to the
# pure-Python implementation when the extension is unavailable.
extensions = [
    Extension(
        "foundry.stats._tdkernel",
        ["src/foundry/stats/_tdkernel.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
