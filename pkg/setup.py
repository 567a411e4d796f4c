import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "ghostfringe._ckernels",
    ["src/ghostfringe/_ckernels.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], language_level=3))
