import numpy as np
from setuptools import setup

# The compiled kernel core is optional: if Cython or a C compiler is missing
# the package installs anyway and falls back to the pure-numpy kernels.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/stlfunnel/_kernels.pyx",
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
    )
    for ext in ext_modules:
        ext.extra_compile_args = ["-O3"]
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[np.get_include()])
