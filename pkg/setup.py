import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


# The compiled kernel is an optimization, not a requirement: if Cython or a
# C compiler is missing the install falls back to the pure-Python kernel.
class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing / broken toolchain
            print(f"warning: skipping compiled kernel build ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: compiled kernel {ext.name} not built ({exc})", file=sys.stderr)


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "neurovirt._kernels._lif_cy",
        sources=["src/neurovirt/_kernels/_lif_cy.pyx"],
        # no -ffast-math: the kernel must stay bit-identical to the pure
        # Python fallback, which requires strict IEEE semantics
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
