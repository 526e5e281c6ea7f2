from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "neurotherm._fastsim",
                ["src/neurotherm/_fastsim.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-Python fallback still works without the compiled kernel
    extensions = []

setup(ext_modules=extensions)
