"""Build the optional Cython kernels.

The package works without them: ``moire_spectra._core`` falls back to the
numpy implementations when the extension is missing.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MOIRE_SPECTRA_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "moire_spectra._kernels",
                    ["src/moire_spectra/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
