"""RK4 integration kernels.

The compiled Cython module ``_rk4`` is used when it has been built; otherwise
the pure-Python ``_fallback`` is selected. Set ``REGBIN_PURE_PYTHON=1`` to force
the fallback. Both expose ``rhs`` and ``integrate`` with identical signatures.
"""

from __future__ import annotations

import os

from . import _fallback

OP_VAR, OP_NOT, OP_AND, OP_OR = _fallback.OP_VAR, _fallback.OP_NOT, _fallback.OP_AND, _fallback.OP_OR

try:
    if os.environ.get("REGBIN_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _rk4 as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_active = BACKENDS[BACKEND]


def get_backend(name: str | None = None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None


__all__ = ["BACKEND", "BACKENDS", "get_backend", "OP_VAR", "OP_NOT", "OP_AND", "OP_OR"]
