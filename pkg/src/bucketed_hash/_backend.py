"""Kernel selection. ``BUCKETED_HASH_BACKEND`` may be ``auto`` (default), ``cython`` or ``python``."""

from __future__ import annotations

import os
from types import ModuleType

from bucketed_hash import _pykernels


def _compiled() -> ModuleType | None:
    try:
        from bucketed_hash import _kernels
    except ImportError:
        return None
    return _kernels


def get_backend(name: str = "auto") -> ModuleType:
    if name not in ("auto", "cython", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "python":
        return _pykernels
    compiled = _compiled()
    if compiled is None:
        if name == "cython":
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _pykernels
    return compiled


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled() is not None else ["python"]


kernels = get_backend(os.environ.get("BUCKETED_HASH_BACKEND", "auto"))
