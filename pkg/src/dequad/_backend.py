"""Select the compiled kernels when available, else the numpy fallback.

Set ``DEQUAD_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("DEQUAD_PURE_PYTHON"):
    from . import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
