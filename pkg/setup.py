"""Build script for the compiled stepping kernel.

The extension is optional: if the C toolchain is unavailable the install
still succeeds and qcflow falls back to the pure-Python kernel at import.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    ext = Extension(
        "qcflow._kernel._core",
        sources=["src/qcflow/_kernel/_core.pyx"],
        # No -ffast-math: the kernel must match the pure-Python backend
        # operation for operation (IEEE semantics, no FP contraction).
        extra_compile_args=["-O2", "-ffp-contract=off"],
        optional=True,
    )
    extensions = cythonize(
        [ext],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
