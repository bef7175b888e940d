# Build the optional compiled kernels; the package falls back to pure Python
# when the extension is missing.
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SUSTAIN_MODELS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "sustain_models._ckernels",
                    ["src/sustain_models/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no FMA contraction: keeps results bit-identical to the fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
