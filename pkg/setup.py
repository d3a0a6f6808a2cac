import os

from setuptools import Extension, setup

if os.environ.get("COGFORGE_PURE"):
    # Pure-python install: kernels fall back to cogforge.kernels._pyback.
    setup()
else:
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "cogforge.kernels._native",
        ["src/cogforge/kernels/_native.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    setup(ext_modules=cythonize([ext], language_level="3"))
