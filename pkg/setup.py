"""Build hook for the optional compiled discrepancy kernels.

The Cython extension is optional: when Cython or a C compiler is missing the
package installs without it and ``qicsim.discrepancy`` uses the numpy fallback.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("QICSIM_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "qicsim.discrepancy._kernels",
                    ["src/qicsim/discrepancy/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math: results must match the fallback bit for bit
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
