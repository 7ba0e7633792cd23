"""Build script: compiles the butterfly kernel extension when Cython is
available.  The package works without it (a numpy fallback is selected at
import time), so any build failure here downgrades to a pure install."""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    # -ffp-contract=off keeps the compiled butterflies bit-identical to the
    # numpy fallback (no FMA contraction of mul+add).
    extensions = cythonize(
        [
            Extension(
                "freqrag._kernels",
                ["src/freqrag/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
