"""Select the kernel implementation at import time.

The compiled module is used when it imports; ``IGLIN_BACKEND=python`` forces
the numpy fallback and ``IGLIN_BACKEND=compiled`` makes a missing build an
error instead of a silent downgrade.
"""

from __future__ import annotations

import os

from . import _fallback

_choice = os.environ.get("IGLIN_BACKEND", "auto").lower()

try:
    from . import _kernels as _compiled
except ImportError:  # not built
    _compiled = None

if _choice == "python":
    _impl = _fallback
elif _choice == "compiled":
    if _compiled is None:
        raise ImportError("IGLIN_BACKEND=compiled but iglin._kernels is not built")
    _impl = _compiled
else:
    _impl = _compiled or _fallback

BACKEND = "compiled" if _impl is _compiled else "python"


def available() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def get(name: str | None = None):
    """Kernel module by name; ``None`` gives the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "compiled" and _compiled is not None:
        return _compiled
    raise LookupError(f"kernel backend {name!r} is not available")


def closure_rounds(nx, ny, ex, ey, blue0, backend: str | None = None):
    return get(backend).closure_rounds(nx, ny, ex, ey, blue0)


def strong_rows(cells, ident, jobs: int = 1, backend: str | None = None):
    impl = get(backend)
    if impl is _fallback:
        return impl.strong_rows(cells, ident)
    return impl.strong_rows(cells, ident, jobs)
