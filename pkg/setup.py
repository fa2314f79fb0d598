"""Build script for the optional compiled solver core.

The package is pure Python by default. When Cython and a C compiler are
available, the SMO inner loop is compiled for a large speedup:

    python setup.py build_ext --inplace

If Cython or numpy are missing at build time the extension is skipped and
the numpy fallback in ``onsetml._core.pure`` is used instead.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "onsetml._core._native",
                ["src/onsetml/_core/_native.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps float ops bit-identical to the
                # numpy fallback (no FMA fusion); do not add -ffast-math.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
