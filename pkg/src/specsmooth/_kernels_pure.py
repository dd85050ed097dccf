"""Pure numpy fallback for the hot tridiagonal kernels.

The compiled extension (_kernels_cy) implements the same three entry
points with identical arithmetic and update order, so both backends
produce bit-identical results.  Here the loops run over matrix rows
while vectorising across shifts / eigenvalue indices / right-hand
sides, which keeps the Python overhead at O(n) instead of O(n*count).
"""

import numpy as np


def sturm_counts(diag, e2, shifts, pivmin):
    """Number of eigenvalues strictly below each shift.

    Runs the LDL^T recurrence q_i = (d_i - s) - e_{i-1}^2 / q_{i-1} and
    counts sign changes; pivots smaller than pivmin in magnitude are
    replaced by -pivmin so the recurrence cannot divide by zero.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    q = diag[0] - shifts
    q = np.where(np.abs(q) <= pivmin, -pivmin, q)
    count = (q < 0.0).astype(np.int64)
    for i in range(1, diag.shape[0]):
        q = (diag[i] - shifts) - e2[i - 1] / q
        q = np.where(np.abs(q) <= pivmin, -pivmin, q)
        count += q < 0.0
    return count


def bisect_eigenvalues(
    diag, e2, first, last, lower, upper, atol, rtol, pivmin, max_sweeps=128
):
    """Bracket eigenvalues first..last-1 (ascending, 0-based) by bisection.

    Every index keeps its own [lo, hi] enclosure; an index is done once
    hi - lo <= atol + rtol*max(|lo|, |hi|) or the midpoint stops moving.
    Returns midpoints and final widths.
    """
    idx = np.arange(first, last, dtype=np.int64)
    lo = np.full(idx.shape, float(lower))
    hi = np.full(idx.shape, float(upper))
    need = idx + 1
    for _ in range(max_sweeps):
        width = hi - lo
        tol = atol + rtol * np.maximum(np.abs(lo), np.abs(hi))
        mid = 0.5 * (lo + hi)
        active = (width > tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        cnt = sturm_counts(diag, e2, mid[active], pivmin)
        go_hi = cnt >= need[active]
        sel = np.flatnonzero(active)
        hi[sel[go_hi]] = mid[active][go_hi]
        lo[sel[~go_hi]] = mid[active][~go_hi]
    return 0.5 * (lo + hi), hi - lo


def solve_shifted_batch(diag, off, sigmas, rhs, pivmin):
    """Solve (T - sigma_j I) x_j = rhs_j for every column j.

    T is symmetric tridiagonal with diagonal `diag` and off-diagonal
    `off` (length n-1).  Gaussian elimination with partial pivoting,
    fused with the forward transform of the right-hand side; the shifted
    matrices are near-singular by design (inverse iteration), which
    partial pivoting handles without drama.
    """
    diag = np.asarray(diag, dtype=np.float64)
    off = np.asarray(off, dtype=np.float64)
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=np.float64))
    n = diag.shape[0]
    b = sigmas.shape[0]
    a = diag[:, None] - sigmas[None, :]
    csup = np.repeat(off[:, None], b, axis=1) if n > 1 else np.empty((0, b))
    r = np.array(rhs, dtype=np.float64, copy=True).reshape(n, b)

    u0 = np.empty((n, b))
    u1 = np.empty((max(n - 1, 0), b))
    u2 = np.zeros((max(n - 2, 0), b))

    for i in range(n - 1):
        ai = a[i]
        ci = csup[i]
        ei = off[i]
        noswap = np.abs(ai) >= abs(ei)

        # no-swap branch; the unselected lanes get divisor 1 so no
        # spurious overflow leaks out of the discarded branch
        ai_safe = np.where(ai == 0.0, pivmin, ai)
        m_ns = ei / np.where(noswap, ai_safe, 1.0)
        a_next_ns = a[i + 1] - m_ns * ci
        r_i_ns = r[i]
        r_next_ns = r[i + 1] - m_ns * r[i]

        # swap branch (row i+1 becomes the pivot row)
        ei_safe = ei if ei != 0.0 else pivmin
        m_sw = ai / np.where(noswap, 1.0, ei_safe)
        a_next_sw = ci - m_sw * a[i + 1]
        r_i_sw = r[i + 1]
        r_next_sw = r[i] - m_sw * r[i + 1]

        u0[i] = np.where(noswap, ai, ei)
        u1[i] = np.where(noswap, ci, a[i + 1])
        a[i + 1] = np.where(noswap, a_next_ns, a_next_sw)
        r[i] = np.where(noswap, r_i_ns, r_i_sw)
        r[i + 1] = np.where(noswap, r_next_ns, r_next_sw)
        if i + 1 <= n - 2:
            u2[i] = np.where(noswap, 0.0, csup[i + 1])
            csup[i + 1] = np.where(noswap, csup[i + 1], -m_sw * csup[i + 1])
    u0[n - 1] = a[n - 1]

    u0 = np.where(u0 == 0.0, pivmin, u0)
    x = np.empty((n, b))
    x[n - 1] = r[n - 1] / u0[n - 1]
    if n >= 2:
        x[n - 2] = (r[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (r[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i]
    return x
