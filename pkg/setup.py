"""Build hook for the optional compiled kernel backend.

The extension is marked optional: if Cython or a C compiler is missing the
install still succeeds and the package runs on the pure numpy backend.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "lingsel._ckern",
                ["src/lingsel/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # fp-contract off: keeps C arithmetic bit-compatible with
                # numpy's non-fused elementwise semantics.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
