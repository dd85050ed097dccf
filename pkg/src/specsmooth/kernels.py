"""Backend selection for the tridiagonal hot kernels.

The compiled extension is used when it imported cleanly; setting
SPECSMOOTH_PURE=1 before import forces the numpy fallback.  Both
backends implement the same arithmetic in the same order, so switching
backend never changes a single bit of output.
"""

import os

__all__ = [
    "backend",
    "sturm_counts",
    "bisect_eigenvalues",
    "solve_shifted_batch",
]


def _select():
    forced = os.environ.get("SPECSMOOTH_PURE", "").strip()
    if forced not in ("", "0"):
        from . import _kernels_pure as impl

        return impl, "pure"
    try:
        from . import _kernels_cy as impl

        return impl, "compiled"
    except ImportError:
        from . import _kernels_pure as impl

        return impl, "pure"


_impl, backend = _select()

sturm_counts = _impl.sturm_counts
bisect_eigenvalues = _impl.bisect_eigenvalues
solve_shifted_batch = _impl.solve_shifted_batch
