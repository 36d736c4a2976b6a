"""Pick the kernel implementation at import time.

Set ``MOTORFAULT_BACKEND=python`` to force the pure-Python kernels.
"""
import os

from . import _pykernels

python_kernels = _pykernels
compiled_kernels = None

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if os.environ.get("MOTORFAULT_BACKEND", "").lower() == "python" or compiled_kernels is None:
    kernels = python_kernels
    NAME = "python"
else:
    kernels = compiled_kernels
    NAME = "cython"


def get(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        return kernels
    if name == "python":
        return python_kernels
    if name == "cython":
        if compiled_kernels is None:
            raise ImportError("compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
