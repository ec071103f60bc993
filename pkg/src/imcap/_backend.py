"""Select the compiled kernels when available, else the NumPy fallback.

Set ``IMCAP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

kernels = _pykernels
NAME = "python"

if os.environ.get("IMCAP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        kernels = _ckernels
        NAME = "cython"


def use(name):
    """Switch backend at runtime (``"python"`` or ``"cython"``); used by tests and benchmarks."""
    global kernels, NAME
    if name == "python":
        kernels, NAME = _pykernels, "python"
    elif name == "cython":
        from . import _ckernels

        kernels, NAME = _ckernels, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return NAME
