"""Lowest eigenpairs of the discrete operator, from first principles.

Eigenvalues come from bisection on Sturm-sequence counts, each index
bracketed to mixed absolute/relative tolerance 1e-12.  Eigenvectors
come from inverse iteration with the bracketed value as shift.  Near
degenerate clusters (gap below 1e-8 relative) share shifts that are
perturbed apart, and their vectors are re-orthogonalised by explicit
Gram-Schmidt, so the returned family stays orthonormal even for exactly
repeated eigenvalues.

Bisection over disjoint eigenvalue index ranges is embarrassingly
parallel; the thread budget comes from SPECSMOOTH_THREADS (0 = auto).
Each chunk writes a disjoint slice of preallocated output, so results
are bit-identical for every schedule and thread count.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalFailure, SelfCheckError, TruncationWarning
from .operators import Grid, assemble_hamiltonian, grid_from_spacing

_EPS = float(np.finfo(np.float64).eps)
_TINY = float(np.finfo(np.float64).tiny)

BISECTION_ATOL = 1e-12
BISECTION_RTOL = 1e-12
CLUSTER_RTOL = 1e-8
SIGN_THRESHOLD = 1e-8
GRAM_TOL = 1e-10
_SEED_BASE = 0x5EED5
_MAX_SWEEPS = 6
_MAX_RESTARTS = 2


def resolve_threads(threads=None):
    """Thread budget: explicit argument, else SPECSMOOTH_THREADS, else auto."""
    if threads is None:
        raw = os.environ.get("SPECSMOOTH_THREADS", "").strip() or "0"
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ValueError("SPECSMOOTH_THREADS must be an integer") from exc
    threads = int(threads)
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    if threads == 0:
        threads = min(os.cpu_count() or 1, 8)
    return max(1, threads)


@dataclass
class EigenSystem:
    """Lowest eigenpairs of a discrete operator.

    energies holds the ascending eigenvalues (the squared-frequency
    scale of the continuum problem), vectors the matching eigenvectors
    as columns, orthonormal in the discrete inner product h * sum(u v).
    residuals are the a-posteriori values ||H v - E v|| per pair.
    """

    energies: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    grid: Grid

    @property
    def count(self):
        return int(self.energies.shape[0])

    @property
    def sqrt_energies(self):
        return np.sqrt(self.energies)

    def inner(self, u, v):
        """Discrete inner product, conjugate-linear in the first slot."""
        return self.grid.spacing * np.vdot(u, v)

    def norm(self, u):
        return float(np.sqrt(self.grid.spacing) * np.linalg.norm(u))

    def coefficients(self, f):
        """Expand a sampled function over the computed eigenvectors."""
        f = np.asarray(f)
        if f.shape[0] != self.grid.n_points:
            raise ValueError("sample length does not match the grid")
        return self.grid.spacing * (self.vectors.T @ f)

    def synthesize(self, coeffs):
        """Evaluate sum_n c_n v_n on the grid."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape[0] != self.count:
            raise ValueError("coefficient length does not match the eigensystem")
        return self.vectors @ coeffs

    def weighted_gram(self, psi):
        """Gram matrix G_mn = <psi v_m, psi v_n> in the discrete product."""
        psi = np.asarray(psi, dtype=float)
        if psi.shape[0] != self.grid.n_points:
            raise ValueError("weight sample length does not match the grid")
        y = self.vectors * psi[:, None]
        g = self.grid.spacing * (y.T @ y)
        return 0.5 * (g + g.T)


def _pivmin(e2):
    return _TINY * max(1.0, float(e2.max()) if e2.size else 1.0)


def count_below(ham, shift):
    """Number of eigenvalues of the operator strictly below the shift."""
    e = np.full(ham.n - 1, ham.off_diagonal)
    e2 = e * e
    return int(
        kernels.sturm_counts(
            np.ascontiguousarray(ham.diagonal, dtype=np.float64),
            e2,
            np.array([float(shift)]),
            _pivmin(e2),
        )[0]
    )


def _bisect_all(diag, e2, count, lower, upper, pivmin, threads):
    energies = np.empty(count)
    widths = np.empty(count)
    chunk = max(16, -(-count // threads))
    spans = [(j, min(j + chunk, count)) for j in range(0, count, chunk)]

    def run(span):
        a, b = span
        lam, wid = kernels.bisect_eigenvalues(
            diag, e2, a, b, lower, upper, BISECTION_ATOL, BISECTION_RTOL, pivmin
        )
        energies[a:b] = lam
        widths[a:b] = wid

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, spans))
    else:
        for span in spans:
            run(span)
    return energies, widths


def _clusters(energies):
    """Contiguous index ranges whose internal gaps fall below tolerance."""
    out = []
    start = 0
    for j in range(1, len(energies) + 1):
        if j == len(energies) or (
            energies[j] - energies[j - 1]
            > CLUSTER_RTOL * max(1.0, abs(energies[j]))
        ):
            out.append((start, j))
            start = j
    return out


def _start_vector(n, index, attempt):
    rng = np.random.default_rng([_SEED_BASE, index, attempt])
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _column_residuals(diag, off, energies, x):
    y = diag[:, None] * x
    y[:-1] += off[:, None] * x[1:]
    y[1:] += off[:, None] * x[:-1]
    y -= energies[None, :] * x
    return np.linalg.norm(y, axis=0)


def _iterate_singletons(diag, off, energies, widths, indices, tol, pivmin, out):
    """Batched inverse iteration for well-separated eigenvalues."""
    n = diag.shape[0]
    pending = list(indices)
    attempt = 0
    while pending and attempt <= _MAX_RESTARTS:
        idx = np.array(pending, dtype=np.int64)
        rhs = np.empty((n, idx.size))
        for t, j in enumerate(idx):
            rhs[:, t] = _start_vector(n, int(j), attempt)
        shifts = energies[idx] + attempt * 4.0 * widths[idx]
        done = np.zeros(idx.size, dtype=bool)
        for _ in range(_MAX_SWEEPS):
            live = np.flatnonzero(~done)
            if live.size == 0:
                break
            x = kernels.solve_shifted_batch(
                diag, off, shifts[live], rhs[:, live], pivmin
            )
            norms = np.linalg.norm(x, axis=0)
            norms[norms == 0.0] = _TINY
            x /= norms
            res = _column_residuals(diag, off, energies[idx[live]], x)
            ok = res <= tol[idx[live]]
            out[:, idx[live[ok]]] = x[:, ok]
            done[live[ok]] = True
            rhs[:, live[~ok]] = x[:, ~ok]
        pending = [int(j) for j, d in zip(idx, done) if not d]
        attempt += 1
    if pending:
        raise NumericalFailure(
            f"inverse iteration failed to converge for eigenvalue index {pending[0]}",
            index=pending[0],
        )


def _iterate_cluster(diag, off, energies, widths, span, tol, pivmin, out):
    """Sequential inverse iteration inside a near-degenerate cluster."""
    a, b = span
    n = diag.shape[0]
    spread = float(energies[b - 1] - energies[a])
    shifts = energies[a:b].copy()
    sep = max(64.0 * _EPS * max(1.0, abs(energies[a])), 4.0 * float(widths[a:b].max()))
    for t in range(1, b - a):
        if shifts[t] < shifts[t - 1] + sep:
            shifts[t] = shifts[t - 1] + sep
    for j in range(a, b):
        accepted = False
        for attempt in range(_MAX_RESTARTS + 1):
            rhs = _start_vector(n, j, attempt)
            sigma = shifts[j - a] + attempt * 4.0 * max(widths[j], sep)
            for _ in range(_MAX_SWEEPS):
                x = kernels.solve_shifted_batch(
                    diag, off, np.array([sigma]), rhs[:, None], pivmin
                )[:, 0]
                # Gram-Schmidt against finished cluster members, twice over
                for _pass in range(2):
                    for i in range(a, j):
                        x -= (out[:, i] @ x) * out[:, i]
                nx = np.linalg.norm(x)
                if nx < np.sqrt(_TINY):
                    break
                x /= nx
                res = _column_residuals(
                    diag, off, np.array([energies[j]]), x[:, None]
                )[0]
                if res <= tol[j] + 4.0 * spread:
                    out[:, j] = x
                    accepted = True
                    break
                rhs = x
            if accepted:
                break
        if not accepted:
            raise NumericalFailure(
                f"inverse iteration failed to converge for eigenvalue index {j}",
                index=j,
            )


def _orthonormalize_groups(vectors, energies, gap_tol):
    """Gram-Schmidt within runs of eigenvalues closer than gap_tol."""
    count = vectors.shape[1]
    start = 0
    for j in range(1, count + 1):
        if j == count or energies[j] - energies[j - 1] > gap_tol:
            for t in range(start + 1, j):
                for _pass in range(2):
                    block = vectors[:, start:t]
                    vectors[:, t] -= block @ (block.T @ vectors[:, t])
                vectors[:, t] /= np.linalg.norm(vectors[:, t])
            start = j


def eigen_lowest(ham, count, threads=None):
    """Compute the `count` lowest eigenpairs of the discrete operator.

    Emits TruncationWarning when the boundary potential is too small
    relative to the largest computed eigenvalue (rule of thumb: demand
    V at the edge >= 4x the top eigenvalue so its eigenfunction decays
    well before the Dirichlet wall).
    """
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    n = ham.n
    if count > n:
        raise ValueError(f"count={count} exceeds matrix dimension {n}")
    threads = resolve_threads(threads)

    diag = np.ascontiguousarray(ham.diagonal, dtype=np.float64)
    off = np.full(n - 1, float(ham.off_diagonal))
    e2 = off * off
    pivmin = _pivmin(e2)
    glo, gup = ham.gershgorin()
    span = max(gup - glo, 1.0)
    lower = glo - 1e-12 * span - 1e-12
    upper = gup + 1e-12 * span + 1e-12
    norm_bound = max(abs(glo), abs(gup))

    energies, widths = _bisect_all(diag, e2, count, lower, upper, pivmin, threads)

    tol = 256.0 * _EPS * norm_bound + 8.0 * widths
    vectors = np.empty((n, count))
    singles = []
    for span_ in _clusters(energies):
        if span_[1] - span_[0] == 1:
            singles.append(span_[0])
        else:
            _iterate_cluster(
                diag, off, energies, widths, span_, tol, pivmin, vectors
            )
    for block in range(0, len(singles), 64):
        _iterate_singletons(
            diag,
            off,
            energies,
            widths,
            singles[block : block + 64],
            tol,
            pivmin,
            vectors,
        )

    # verify orthonormality; repair by grouped Gram-Schmidt if needed
    gram = vectors.T @ vectors
    off_gram = np.abs(gram - np.eye(count)).max() if count > 1 else 0.0
    if off_gram > GRAM_TOL:
        _orthonormalize_groups(vectors, energies, gap_tol=1e-4 * norm_bound)

    # discrete-L2 normalisation and deterministic sign
    h = ham.grid.spacing
    vectors /= np.sqrt(h)
    for j in range(count):
        col = vectors[:, j]
        lead = np.flatnonzero(np.abs(col) > SIGN_THRESHOLD)
        if lead.size and col[lead[0]] < 0.0:
            np.negative(col, out=col)

    resid = ham.apply(vectors) - vectors * energies[None, :]
    residuals = np.sqrt(h) * np.linalg.norm(resid, axis=0)

    v_edge = max(float(ham.potential[0]), float(ham.potential[-1]))
    if v_edge < 4.0 * float(energies[-1]):
        warnings.warn(
            TruncationWarning(
                f"boundary potential {v_edge:.6g} is below 4x the top computed "
                f"eigenvalue {energies[-1]:.6g}; enlarge the domain"
            ),
            stacklevel=2,
        )

    return EigenSystem(
        energies=energies, vectors=vectors, residuals=residuals, grid=ham.grid
    )


def residual_check(ham, eig):
    """Recompute ||H v - E v|| per pair and verify the stored residuals."""
    if eig.grid.n_points != ham.n:
        raise ValueError("eigensystem grid does not match the operator")
    resid = ham.apply(eig.vectors) - eig.vectors * eig.energies[None, :]
    fresh = np.sqrt(ham.grid.spacing) * np.linalg.norm(resid, axis=0)
    slack = 1e-9 * max(1.0, float(np.max(np.abs(ham.diagonal))))
    if np.any(fresh > eig.residuals + slack):
        raise SelfCheckError("recomputed residuals exceed the stored bounds")
    return fresh


@dataclass
class ConvergenceTable:
    """Eigenvalues across grid refinements plus observed convergence order."""

    spacings: np.ndarray
    energies: np.ndarray
    observed_order: np.ndarray
    extrapolated: np.ndarray


def _order_from_triple(h1, h2, h3, l1, l2, l3):
    d12 = l1 - l2
    d23 = l2 - l3
    if d23 == 0.0 or d12 * d23 <= 0.0:
        return np.nan
    ratio = d12 / d23

    def f(p):
        return (h1**p - h2**p) / (h2**p - h3**p) - ratio

    lo, hi = 0.05, 12.0
    flo, fhi = f(lo), f(hi)
    if not np.isfinite(flo) or not np.isfinite(fhi) or flo * fhi > 0.0:
        return np.nan
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if not np.isfinite(fm):
            return np.nan
        if flo * fm <= 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def convergence_table(spec, half_width, spacings, count, threads=None):
    """Refinement study: eigenvalues per spacing and Richardson order.

    Needs at least three strictly decreasing spacings; the observed
    order is extracted from the finest three and should sit near 2 for
    the 3-point discretisation.
    """
    spacings = [float(s) for s in spacings]
    if len(spacings) < 3:
        raise ValueError("need at least three spacings")
    if any(b >= a for a, b in zip(spacings, spacings[1:])):
        raise ValueError("spacings must be strictly decreasing")
    energies = np.empty((len(spacings), count))
    actual = np.empty(len(spacings))
    for i, s in enumerate(spacings):
        grid = grid_from_spacing(half_width, s)
        ham = assemble_hamiltonian(spec, grid)
        eig = eigen_lowest(ham, count, threads=threads)
        energies[i] = eig.energies
        actual[i] = grid.spacing
    h1, h2, h3 = actual[-3], actual[-2], actual[-1]
    orders = np.empty(count)
    extrap = np.empty(count)
    for j in range(count):
        l1, l2, l3 = energies[-3, j], energies[-2, j], energies[-1, j]
        p = _order_from_triple(h1, h2, h3, l1, l2, l3)
        orders[j] = p
        if np.isfinite(p):
            r = (h2 / h3) ** p
            extrap[j] = l3 + (l3 - l2) / (r - 1.0)
        else:
            extrap[j] = l3
    return ConvergenceTable(
        spacings=actual, energies=energies, observed_order=orders, extrapolated=extrap
    )
