"""Backend selection: compiled kernels vs the pure-numpy reference.

The environment variable ``L2OPT_BACKEND`` picks the backend at import time:

* ``auto`` (default): compiled kernels when the extension built, numpy otherwise
* ``python``: always the numpy reference
* ``compiled``: require the extension, raise if it is missing

The two backends agree to floating-point reduction order (~1e-12 relative),
not bit-exactly; runs are bit-reproducible within one backend.
"""
from __future__ import annotations

import os

_CHOICES = ("auto", "python", "compiled")
_mode = os.environ.get("L2OPT_BACKEND", "auto").strip().lower()
if _mode not in _CHOICES:
    raise RuntimeError(f"L2OPT_BACKEND must be one of {_CHOICES}, got {_mode!r}")

try:
    from . import _speedups as _ext
except ImportError:
    _ext = None

if _mode == "compiled" and _ext is None:
    raise RuntimeError("L2OPT_BACKEND=compiled but the compiled kernels are not built")

_active = _ext if _mode in ("auto", "compiled") else None


def backend_name() -> str:
    return "compiled" if _active is not None else "python"


def has_compiled() -> bool:
    return _ext is not None


def module():
    if _active is None:
        raise RuntimeError("compiled backend is not active")
    return _active


def active_or_none():
    """The compiled module when it is the active backend, else None."""
    return _active


def fast_path_ok(net, masks) -> bool:
    """Compiled kernels cover plain dense nets without masks or batch norm."""
    return _active is not None and masks is None and not net.has_batch_norm


def force(mode: str) -> None:
    """Re-select the backend (used by tests and the benchmark)."""
    global _active
    if mode not in _CHOICES:
        raise ValueError(f"backend must be one of {_CHOICES}")
    if mode == "compiled" and _ext is None:
        raise RuntimeError("compiled kernels are not built")
    _active = _ext if mode in ("auto", "compiled") else None
