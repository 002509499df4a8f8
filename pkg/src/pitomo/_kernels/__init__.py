"""Numeric kernels with interchangeable pure-Python and compiled backends.

At import time the compiled Cython backend is selected when available,
the pure-Python reference otherwise.  Override with the environment
variable ``PITOMO_BACKEND`` (``fast`` or ``pure``) or by calling
:func:`use`.  Both backends implement the same operations and are
required to produce bit-identical results; callers access them through
this module's attributes so a switch takes effect everywhere.
"""

from __future__ import annotations

import os

from . import pure as _pure

_BACKENDS = {"pure": _pure}

try:
    from . import _fast as _fastmod
    _BACKENDS["fast"] = _fastmod
except ImportError:
    _fastmod = None

_EXPORTED = ("mat_mul", "mat_dagger", "kron", "partial_trace", "eigh",
             "Rng", "loggam", "sinusoid_sq_residual")

_active = "uninitialized"


def use(name: str) -> None:
    """Select the kernel backend ('fast' or 'pure') for the whole process."""
    global _active
    try:
        mod = _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; "
            f"available: {sorted(_BACKENDS)}") from None
    for fn in _EXPORTED:
        globals()[fn] = getattr(mod, fn)
    _active = name


def active_backend() -> str:
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


_env = os.environ.get("PITOMO_BACKEND", "").strip().lower()
if _env:
    use(_env)
else:
    use("fast" if "fast" in _BACKENDS else "pure")
