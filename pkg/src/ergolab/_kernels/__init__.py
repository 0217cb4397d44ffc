"""Hot loops of the averaging engine, compiled when available.

The Cython extension is used when it imports; otherwise, or when the
``ERGOLAB_PURE`` environment variable is set, the numpy fallback is used.
Both backends expose the same functions with identical results.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("ERGOLAB_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _fallback

compensated_accumulate = _impl.compensated_accumulate
permutation_gather = _impl.permutation_gather
dd_phase_fraction = _impl.dd_phase_fraction

__all__ = [
    "BACKEND",
    "compensated_accumulate",
    "permutation_gather",
    "dd_phase_fraction",
    "backend_module",
]


def backend_module(name):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
