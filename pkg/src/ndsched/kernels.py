"""Kernel backend selection.

The compiled module is used when it imports and ``NDSCHED_PURE_PYTHON`` is
unset. Both backends expose the same functions with the same semantics.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

# compiled kernels accumulate in signed 64-bit integers
INT64_SAFE = 1 << 62

BACKENDS = ("auto", "cython", "python")


def compiled_available() -> bool:
    return _ckernels is not None


def default_backend() -> str:
    if os.environ.get("NDSCHED_PURE_PYTHON") or _ckernels is None:
        return "python"
    return "cython"


def get(backend: str | None = None, magnitude: int = 0):
    """Return the kernel module for ``backend``.

    ``magnitude`` is an upper bound on any integer the kernel will
    accumulate; above the int64-safe range ``auto`` falls back to Python and
    an explicit ``cython`` request is refused.
    """
    backend = backend or "auto"
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "python":
        return _pykernels
    if backend == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        if magnitude >= INT64_SAFE:
            raise OverflowError("values exceed the int64 range of the compiled kernels")
        return _ckernels
    if default_backend() == "python" or magnitude >= INT64_SAFE:
        return _pykernels
    return _ckernels
