import os

from setuptools import Extension, setup

# DMCQUANT_NO_EXT=1 skips the compiled core; the package then runs on its
# pure-Python kernels.
ext_modules = []
if not os.environ.get("DMCQUANT_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dmcquant._ckernels",
                ["src/dmcquant/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
