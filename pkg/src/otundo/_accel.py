"""Backend selection for the search kernels.

``OTUNDO_BACKEND=numpy`` forces the pure-numpy path; the default is numba
when it imports.  Functions taking a ``backend`` argument accept ``None``
(use the default), ``"numba"`` or ``"numpy"``.
"""
from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

HAS_NUMBA = numba is not None
BACKENDS = ("numba", "numpy")


def default_backend() -> str:
    wanted = os.environ.get("OTUNDO_BACKEND", "").strip().lower()
    if wanted and wanted not in BACKENDS:
        raise ValueError(f"OTUNDO_BACKEND must be one of {BACKENDS}, got {wanted!r}")
    if wanted == "numpy" or not HAS_NUMBA:
        return "numpy"
    return "numba"


def resolve(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f
