"""Kernel selection.

Imports the compiled extension when available, otherwise the
pure-Python fallback. Set ECOTRACE_PURE_PYTHON=1 to force the fallback
(used by the benchmark and the implementation-parity tests). Both
implementations are arithmetically identical; only speed differs.
"""

import os

if os.environ.get("ECOTRACE_PURE_PYTHON"):
    from ecotrace._kernels import fallback as _impl
else:
    try:
        from ecotrace._kernels import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from ecotrace._kernels import fallback as _impl

IMPLEMENTATION = _impl.IMPLEMENTATION
resample_linear_1hz = _impl.resample_linear_1hz
rect_sum = _impl.rect_sum
trap_sum = _impl.trap_sum
find_gaps = _impl.find_gaps


def available_implementations():
    """Names of the kernel implementations importable in this install."""
    names = ["pure-python"]
    try:
        from ecotrace._kernels import _core  # noqa: F401
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names
