"""Builds the optional compiled cosine kernel. A failed extension build is
non-fatal: the package falls back to the pure-Python kernel at import."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("evolog._ckernels", ["src/evolog/_ckernels.pyx"])],
        language_level=3,
    )
    for ext in extensions:
        ext.optional = True
except ImportError:
    extensions = []

setup(ext_modules=extensions)
