import os

import numpy as np
from setuptools import Extension, setup

# The numpy fallback is always importable; a failed compile only loses speed.
# Set SIMHASH_ATTENTION_NO_EXT=1 to skip the extension entirely.
ext_modules = []
if not os.environ.get("SIMHASH_ATTENTION_NO_EXT"):
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "simhash_attention._ckernels",
            ["src/simhash_attention/_ckernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            # no fast-math / FMA contraction: kernels must match the
            # fallback's sequential accumulation bit-for-bit
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
