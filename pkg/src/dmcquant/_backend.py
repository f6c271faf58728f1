"""Kernel backend selection.

The compiled core (``_ckernels``) is used for the alpha-MI cost family when it
imports; otherwise, or for custom ``phi`` functions, the pure-Python kernels
run. ``DMCQUANT_PURE_PYTHON=1`` forces the fallback at import time.
"""
from __future__ import annotations

import contextlib
import os

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

HAVE_COMPILED = _ckernels is not None
_active = "compiled" if HAVE_COMPILED and not os.environ.get("DMCQUANT_PURE_PYTHON") else "python"


def active() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernels are not available; build the extension first")
    _active = name


@contextlib.contextmanager
def use(name: str):
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def available() -> list[str]:
    return ["compiled", "python"] if HAVE_COMPILED else ["python"]


def compiled_for(cost):
    """The compiled kernel module if it can serve ``cost``, else None."""
    if _active == "compiled" and cost.kind == "alpha":
        return _ckernels
    return None
