# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled tridiagonal kernels.

Scalar mirror of _kernels_pure: the same operations in the same order,
compiled without floating-point contraction, so outputs match the numpy
fallback bit for bit.  All heavy loops release the GIL; callers may run
disjoint index chunks on separate threads.
"""

import numpy as np

from libc.math cimport fabs


def sturm_counts(diag, e2, shifts, double pivmin):
    """Number of eigenvalues strictly below each shift."""
    d_arr = np.ascontiguousarray(diag, dtype=np.float64)
    e2_arr = np.ascontiguousarray(e2, dtype=np.float64)
    s_arr = np.ascontiguousarray(np.atleast_1d(np.asarray(shifts, dtype=np.float64)))
    out = np.empty(s_arr.shape[0], dtype=np.int64)
    cdef double[::1] d = d_arr
    cdef double[::1] ee = e2_arr
    cdef double[::1] s = s_arr
    cdef long long[::1] cnt = out
    cdef Py_ssize_t n = d.shape[0], m = s.shape[0], i, j
    cdef double q, sj
    cdef long long c
    with nogil:
        for j in range(m):
            sj = s[j]
            q = d[0] - sj
            if fabs(q) <= pivmin:
                q = -pivmin
            c = 1 if q < 0.0 else 0
            for i in range(1, n):
                q = (d[i] - sj) - ee[i - 1] / q
                if fabs(q) <= pivmin:
                    q = -pivmin
                if q < 0.0:
                    c += 1
            cnt[j] = c
    return out


def bisect_eigenvalues(diag, e2, Py_ssize_t first, Py_ssize_t last,
                       double lower, double upper, double atol, double rtol,
                       double pivmin, int max_sweeps=128):
    """Bracket eigenvalues first..last-1 by Sturm bisection."""
    d_arr = np.ascontiguousarray(diag, dtype=np.float64)
    e2_arr = np.ascontiguousarray(e2, dtype=np.float64)
    cdef Py_ssize_t count = last - first
    lam_arr = np.empty(count)
    wid_arr = np.empty(count)
    cdef double[::1] d = d_arr
    cdef double[::1] ee = e2_arr
    cdef double[::1] lam = lam_arr
    cdef double[::1] wid = wid_arr
    cdef Py_ssize_t n = d.shape[0], i, j
    cdef int it
    cdef double lo, hi, mid, tol, q, width, alo, ahi
    cdef long long c, need
    with nogil:
        for j in range(count):
            lo = lower
            hi = upper
            need = first + j + 1
            for it in range(max_sweeps):
                width = hi - lo
                alo = fabs(lo)
                ahi = fabs(hi)
                tol = atol + rtol * (alo if alo > ahi else ahi)
                mid = 0.5 * (lo + hi)
                if not (width > tol and mid > lo and mid < hi):
                    break
                q = d[0] - mid
                if fabs(q) <= pivmin:
                    q = -pivmin
                c = 1 if q < 0.0 else 0
                for i in range(1, n):
                    q = (d[i] - mid) - ee[i - 1] / q
                    if fabs(q) <= pivmin:
                        q = -pivmin
                    if q < 0.0:
                        c += 1
                if c >= need:
                    hi = mid
                else:
                    lo = mid
            lam[j] = 0.5 * (lo + hi)
            wid[j] = hi - lo
    return lam_arr, wid_arr


def solve_shifted_batch(diag, off, sigmas, rhs, double pivmin):
    """Solve (T - sigma_j I) x_j = rhs_j per column, partial pivoting."""
    d_arr = np.ascontiguousarray(diag, dtype=np.float64)
    e_arr = np.ascontiguousarray(off, dtype=np.float64)
    s_arr = np.atleast_1d(np.asarray(sigmas, dtype=np.float64))
    cdef Py_ssize_t n = d_arr.shape[0], b = s_arr.shape[0]
    r_arr = np.array(rhs, dtype=np.float64, copy=True).reshape(n, b)
    r_arr = np.ascontiguousarray(r_arr)
    x_arr = np.empty((n, b))
    a_scr = np.empty(n)
    c_scr = np.empty(max(n - 1, 1))
    u0_scr = np.empty(n)
    u1_scr = np.empty(max(n - 1, 1))
    u2_scr = np.empty(max(n - 2, 1))
    cdef double[::1] d = d_arr
    cdef double[::1] e = e_arr
    cdef double[::1] s = np.ascontiguousarray(s_arr)
    cdef double[:, ::1] R = r_arr
    cdef double[:, ::1] X = x_arr
    cdef double[::1] a = a_scr
    cdef double[::1] cs = c_scr
    cdef double[::1] u0 = u0_scr
    cdef double[::1] u1 = u1_scr
    cdef double[::1] u2 = u2_scr
    cdef Py_ssize_t i, j
    cdef double ai, ci, ei, m, piv, sj, told_i, told_n
    with nogil:
        for j in range(b):
            sj = s[j]
            for i in range(n):
                a[i] = d[i] - sj
            for i in range(n - 1):
                cs[i] = e[i]
            for i in range(n - 2):
                u2[i] = 0.0
            for i in range(n - 1):
                ai = a[i]
                ci = cs[i]
                ei = e[i]
                if fabs(ai) >= fabs(ei):
                    piv = ai if ai != 0.0 else pivmin
                    m = ei / piv
                    u0[i] = ai
                    u1[i] = ci
                    a[i + 1] = a[i + 1] - m * ci
                    R[i + 1, j] = R[i + 1, j] - m * R[i, j]
                else:
                    m = ai / ei
                    u0[i] = ei
                    u1[i] = a[i + 1]
                    a[i + 1] = ci - m * a[i + 1]
                    told_i = R[i, j]
                    told_n = R[i + 1, j]
                    R[i, j] = told_n
                    R[i + 1, j] = told_i - m * told_n
                    if i + 1 <= n - 2:
                        u2[i] = cs[i + 1]
                        cs[i + 1] = -m * cs[i + 1]
            u0[n - 1] = a[n - 1]
            piv = u0[n - 1] if u0[n - 1] != 0.0 else pivmin
            X[n - 1, j] = R[n - 1, j] / piv
            if n >= 2:
                piv = u0[n - 2] if u0[n - 2] != 0.0 else pivmin
                X[n - 2, j] = (R[n - 2, j] - u1[n - 2] * X[n - 1, j]) / piv
            for i in range(n - 3, -1, -1):
                piv = u0[i] if u0[i] != 0.0 else pivmin
                X[i, j] = (R[i, j] - u1[i] * X[i + 1, j] - u2[i] * X[i + 2, j]) / piv
    return x_arr
