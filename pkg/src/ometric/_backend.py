"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``OMETRIC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("OMETRIC_PURE_PYTHON"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"

KIND_AFFINE = _kernels_py.KIND_AFFINE
KIND_MAX = _kernels_py.KIND_MAX
KIND_POWPROD = _kernels_py.KIND_POWPROD
