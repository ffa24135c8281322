"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when it was built; set ``CONVDYN_PURE_PYTHON=1``
to force the fallback.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _pykernels

__all__ = ["BACKEND", "get_backend", "available_backends", "tree_depths", "wiener_prefix_series", "accumulate_step_curve"]


def _load_compiled() -> ModuleType | None:
    try:
        return importlib.import_module(f"{__name__}._ckernels")
    except ImportError:
        return None


_compiled = _load_compiled()


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


if _compiled is not None and os.environ.get("CONVDYN_PURE_PYTHON", "") in ("", "0"):
    _impl = _compiled
    BACKEND = "compiled"
else:
    _impl = _pykernels
    BACKEND = "python"

tree_depths = _impl.tree_depths
wiener_prefix_series = _impl.wiener_prefix_series
accumulate_step_curve = _impl.accumulate_step_curve
