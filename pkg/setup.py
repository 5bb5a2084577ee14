import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; qgsf._backend falls back
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "qgsf._core",
                ["src/qgsf/_core.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: the fallback must reproduce results bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
