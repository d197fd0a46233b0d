"""Kernel backend selection.

The compiled extension is used when importable; ``KPZLAB_BACKEND=python``
forces the numpy fallback.
"""
from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _core_py


def _load() -> ModuleType:
    if os.environ.get("KPZLAB_BACKEND", "").lower() == "python":
        return _core_py
    try:
        return importlib.import_module("kpzlab._core")
    except ImportError:
        return _core_py


core: ModuleType = _load()


def available() -> dict[str, ModuleType]:
    """All importable backends, keyed by name."""
    out = {"python": _core_py}
    try:
        out["cython"] = importlib.import_module("kpzlab._core")
    except ImportError:
        pass
    return out


def use(name: str) -> ModuleType:
    """Switch the active backend (``"cython"`` or ``"python"``)."""
    global core
    core = available()[name]
    return core
