"""Hot collision kernels: compiled extension with a pure-Python fallback.

Set YIELDSIM_PURE_PYTHON=1 to force the fallback (used by the benchmark
and the kernel-equivalence tests).
"""
import os

if os.environ.get("YIELDSIM_PURE_PYTHON"):
    from . import _sat_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _sat as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _sat_py as _impl

        BACKEND = "python"

obb_overlap = _impl.obb_overlap
sat_margin = _impl.sat_margin
first_overlap_index = _impl.first_overlap_index

__all__ = ["BACKEND", "obb_overlap", "sat_margin", "first_overlap_index"]
