"""Build the optional compiled kernels; the package works without them."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BMR_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
        ext_modules = cythonize([Extension("bmr.emu._kernels", ["src/bmr/emu/_kernels.pyx"])], quiet=True,
                                compiler_directives={"language_level": "3"})
    except ImportError:
        pass

setup(ext_modules=ext_modules)
