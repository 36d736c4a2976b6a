"""Build the optional Cython kernels.

The package works without them; ``motorfault._backend`` falls back to the
pure-Python implementation when the extension is missing.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MOTORFAULT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "motorfault._ckernels",
                    ["src/motorfault/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no contraction into FMA: results must match the Python fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3", "embedsignature": True},
        )

setup(ext_modules=ext_modules)
