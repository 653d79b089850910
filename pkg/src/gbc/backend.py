"""Kernel backend selection.

The curvature pipeline and the delta contractions have two interchangeable
implementations: a compiled Cython extension (gbc._kernels) and a batched
numpy fallback (gbc.kernels_numpy).  The compiled one is preferred when it
imported cleanly; set GBC_BACKEND=numpy or GBC_BACKEND=cython to force a
choice (forcing cython raises if the extension is unavailable).
"""

import os

from . import kernels_numpy

_mode = os.environ.get("GBC_BACKEND", "auto").lower()
if _mode not in ("auto", "cython", "numpy"):
    raise RuntimeError(f"GBC_BACKEND must be auto, cython or numpy, not {_mode!r}")

_compiled = None
if _mode in ("auto", "cython"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _mode == "cython":
            raise RuntimeError("GBC_BACKEND=cython but the compiled kernel "
                               "is not available; rebuild the extension")
        _compiled = None

if _compiled is not None:
    ACTIVE = "cython"
    _impl = _compiled
else:
    ACTIVE = "numpy"
    _impl = kernels_numpy

curvature_fields = _impl.curvature_fields
raw_sum = _impl.raw_sum
lovelock_sum = _impl.lovelock_sum


def active_backend():
    """Name of the kernel backend in use ("cython" or "numpy")."""
    return ACTIVE


def available_backends():
    """Mapping backend name -> kernel module, for benchmarks and tests."""
    out = {"numpy": kernels_numpy}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def get_kernels(name=None):
    """Kernel module by name; None selects the active backend."""
    if name is None:
        return _impl
    try:
        return available_backends()[name]
    except KeyError:
        raise RuntimeError(f"backend {name!r} not available") from None


def thread_count():
    """Worker cap from GBC_THREADS (default: hardware parallelism)."""
    raw = os.environ.get("GBC_THREADS", "")
    if raw.strip():
        try:
            count = int(raw)
        except ValueError:
            raise RuntimeError(f"GBC_THREADS must be an integer, not {raw!r}")
        return max(1, count)
    return max(1, os.cpu_count() or 1)
