"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
semantically identical. Set ``QPATH_BACKEND=python`` or ``compiled`` to force
one (the benchmark and the parity tests do).
"""

import os

from . import _kernels_py
from .errors import ConfigError

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def available_backends():
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return tuple(names)


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` (or the environment default)."""
    if name is None:
        name = os.environ.get("QPATH_BACKEND", "").strip().lower() or None
    if name is None:
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ConfigError("compiled kernels requested but not built")
        return _compiled
    raise ConfigError(f"unknown kernel backend {name!r}")


kernels = get_kernels()
backend_name = kernels.BACKEND
