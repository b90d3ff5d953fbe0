from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "transduce_opt.kernels._cn",
                ["src/transduce_opt/kernels/_cn.pyx"],
                extra_compile_args=["-O3", "-fcx-limited-range"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
