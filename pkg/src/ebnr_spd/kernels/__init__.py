"""Hot-kernel dispatch.

The sequential inner loops (delta-modulator tracking, windowed detection
with refractory state, HRAM row stepping) are compiled with numba when it
is importable. Setting ``EBNR_SPD_NO_NUMBA=1`` (or any of 1/true/yes/on)
selects the pure numpy/Python fallback instead; both paths are semantically
identical and covered by the same tests. ``benchmarks/bench_kernels.py``
compares their throughput.
"""

import os

from . import _numpy

_FLAG = os.environ.get("EBNR_SPD_NO_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

if not _DISABLED:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = _numpy
        BACKEND = "numpy"
else:
    _impl = _numpy
    BACKEND = "numpy"

delta_mod_counts = _impl.delta_mod_counts
detect_from_counts = _impl.detect_from_counts
hram_run = _impl.hram_run
refractory_walk = _impl.refractory_walk


def get_backend(name):
    """Return the kernel module for an explicit backend name ('numpy'/'numba')."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")
