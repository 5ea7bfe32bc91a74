"""Build script for the optional compiled matcher kernel.

The automaton scan in ontodst.matching is the hot loop when sweeping a
corpus.  We compile it with Cython when a toolchain is available; the
package falls back to the pure-Python scan otherwise (selected at import
in ontodst.matching).
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("ontodst.matching._scan_cy", ["src/ontodst/matching/_scan_cy.pyx"])],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
