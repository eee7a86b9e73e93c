import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Pure-python install still works; trapent.backend falls back to the
    # numpy implementation when the extension is missing.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "trapent._core_cy",
                ["src/trapent/_core_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
