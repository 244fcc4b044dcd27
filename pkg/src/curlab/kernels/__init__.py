"""Hot-loop kernels with backend selection at import.

The compiled extension is preferred when present; otherwise the NumPy
implementation is used. The CURLAB_BACKEND environment variable forces a
backend ("numpy" or "cython"), which the equivalence tests and the
benchmark rely on.
"""

from __future__ import annotations

import os

from . import pykern

_forced = os.environ.get("CURLAB_BACKEND", "").strip().lower()

if _forced == "numpy":
    _impl = pykern
elif _forced == "cython":
    from . import _fastkern as _impl  # ImportError here means the extension was not built
elif _forced:
    raise ImportError(f"unknown CURLAB_BACKEND {_forced!r}; expected 'numpy' or 'cython'")
else:
    try:
        from . import _fastkern as _impl
    except ImportError:
        _impl = pykern

BACKEND = _impl.NAME
LOG_CLAMP = _impl.LOG_CLAMP
forward = _impl.forward
backward = _impl.backward


def available_backends() -> list[str]:
    names = ["numpy"]
    try:
        from . import _fastkern  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    return names
