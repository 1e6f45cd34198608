"""Backend selection for the hot per-trial kernel.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported. Set ``MIMONOMA_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _kernels_py

__all__ = ["BACKEND", "zf_gains", "load_backend", "available_backends"]


def load_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None=auto)."""
    if name == "python":
        return _kernels_py
    if name in (None, "cython"):
        try:
            return importlib.import_module("mimonoma._kernels")
        except ImportError:
            if name == "cython":
                raise
            return _kernels_py
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        importlib.import_module("mimonoma._kernels")
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


_backend = load_backend("python" if os.environ.get("MIMONOMA_PURE_PYTHON") else None)
BACKEND = _backend.BACKEND
zf_gains = _backend.zf_gains
