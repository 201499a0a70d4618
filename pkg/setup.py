import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure-numpy
# engine when the extension is unavailable (see l2opt.nn.backend).
extensions = [
    Extension(
        "l2opt.nn._speedups",
        ["src/l2opt/nn/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
