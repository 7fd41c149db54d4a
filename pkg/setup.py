"""Builds the optional compiled kernel extension.

The package works without it (tpo.kernels falls back to the pure-Python
implementation); the extension makes headless simulation run well above
real time.  Set TPO_NO_EXT=1 to skip the build entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("TPO_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext = Extension(
            "tpo._speedups",
            ["src/tpo/_speedups.pyx"],
            # Two flags keep the C arithmetic bit-identical to the pure-Python
            # fallback: no FMA contraction, and no fusing of adjacent cos/sin
            # calls into glibc sincos (whose cos can differ by one ulp).
            extra_compile_args=["-O2", "-ffp-contract=off",
                                "-fno-builtin-sincos"],
        )
        ext.optional = True
        ext_modules = cythonize([ext], language_level="3")
    except ImportError:
        pass

setup(ext_modules=ext_modules)
