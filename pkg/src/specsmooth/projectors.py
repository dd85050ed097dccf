"""Unit spectral windows [N, N+1) and the decay of weighted projections.

Eigenvalues are binned by their integer part; the projector onto a bin
acts on eigen-coefficients by masking.  The weighted norms ||psi v_n||
and per-bin operator norms quantify how fast the weighted projections
decay along the spectrum, and the log-log fit extracts the decay rate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BinBoundaryWarning

BOUNDARY_TOL = 1e-9


@dataclass
class SpectralBins:
    """Assignment of eigenvalue indices to unit windows [N, N+1)."""

    labels: np.ndarray
    members: dict[int, np.ndarray]
    bin_of: np.ndarray

    @classmethod
    def from_energies(cls, energies, boundary_tol=BOUNDARY_TOL):
        energies = np.asarray(energies, dtype=float)
        if energies.ndim != 1 or energies.size == 0:
            raise ValueError("energies must be a nonempty 1-d array")
        if np.any(energies < 0.0):
            raise ValueError("negative eigenvalue: operator is expected nonnegative")
        bin_of = np.floor(energies).astype(np.int64)
        frac = energies - bin_of
        near = np.minimum(frac, 1.0 - frac) <= boundary_tol
        if np.any(near):
            warnings.warn(
                BinBoundaryWarning(
                    f"{int(near.sum())} eigenvalue(s) within {boundary_tol:g} of "
                    "an integer bin edge; binning may be resolution-limited"
                ),
                stacklevel=3,
            )
        labels = np.unique(bin_of)
        members = {
            int(lab): np.flatnonzero(bin_of == lab).astype(np.int64)
            for lab in labels
        }
        return cls(labels=labels, members=members, bin_of=bin_of)

    @property
    def count(self):
        return int(self.bin_of.shape[0])


def bin_spectrum(eig, boundary_tol=BOUNDARY_TOL):
    """Bin the computed spectrum into unit windows by integer part."""
    return SpectralBins.from_energies(eig.energies, boundary_tol=boundary_tol)


def apply_projector(bins, coeffs, label):
    """Project eigen-coefficients onto one bin; empty bins give zero."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != bins.count:
        raise ValueError("coefficient length does not match the binned spectrum")
    out = np.zeros_like(coeffs)
    idx = bins.members.get(int(label))
    if idx is not None:
        out[idx] = coeffs[idx]
    return out


def floor_deviation(eig):
    """Largest fractional part among computed eigenvalues, in [0, 1)."""
    energies = np.asarray(eig.energies, dtype=float)
    if np.any(energies < 0.0):
        raise ValueError("negative eigenvalue: operator is expected nonnegative")
    return float(np.max(energies - np.floor(energies)))


@dataclass
class DecayReport:
    """Weighted norms along the spectrum plus per-bin operator norms."""

    sqrt_energies: np.ndarray
    weighted_norms: np.ndarray
    bin_labels: np.ndarray
    bin_norms: dict[int, float]


def weighted_decay(eig, psi, bins):
    """Per-mode weighted norms and per-bin norms of the weighted projector.

    The norm of (weight x projector) on the span of a bin equals the
    largest singular value of the weighted eigenvector block, computed
    from the bin's weighted Gram block.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.shape[0] != eig.grid.n_points:
        raise ValueError("weight sample length does not match the grid")
    if bins.count != eig.count:
        raise ValueError("bin index does not match the eigensystem")
    h = eig.grid.spacing
    w2 = psi * psi
    norms = np.sqrt(h * (w2[:, None] * eig.vectors**2).sum(axis=0))
    gram = eig.weighted_gram(psi)
    bin_norms = {}
    for lab, idx in bins.members.items():
        if idx.size == 1:
            bin_norms[lab] = float(norms[idx[0]])
        else:
            block = gram[np.ix_(idx, idx)]
            top = float(np.linalg.eigvalsh(block)[-1])
            bin_norms[lab] = float(np.sqrt(max(top, 0.0)))
    return DecayReport(
        sqrt_energies=eig.sqrt_energies,
        weighted_norms=norms,
        bin_labels=bins.bin_of.copy(),
        bin_norms=bin_norms,
    )


@dataclass
class DecayFit:
    """Least-squares decay rate of weighted norms against sqrt(energy)."""

    exponent: float
    constant: float
    rms_residual: float
    excluded: int
    fit_lo: int
    fit_hi: int


def fit_decay_exponent(report, n_lo, n_hi):
    """Fit log ||psi v_n|| ~ -gamma log lambda_n over modes n_lo..n_hi.

    Indices are 1-based and inclusive, and the window must span at
    least 10 modes.  Zero weighted norms cannot enter the log fit; they
    are dropped and counted.  The returned constant is the sharp one:
    sup of ||psi v_n|| * lambda_n^gamma over the fitted modes.
    """
    n_lo, n_hi = int(n_lo), int(n_hi)
    count = report.weighted_norms.shape[0]
    if not (1 <= n_lo < n_hi <= count):
        raise ValueError("fit range must satisfy 1 <= n_lo < n_hi <= count")
    if n_hi - n_lo < 10:
        raise ValueError("fit range must span at least 10 modes")
    sel = slice(n_lo - 1, n_hi)
    norms = report.weighted_norms[sel]
    lams = report.sqrt_energies[sel]
    used = norms > 0.0
    excluded = int((~used).sum())
    if excluded:
        warnings.warn(
            f"{excluded} zero weighted norm(s) excluded from the decay fit",
            stacklevel=2,
        )
    if not np.any(used):
        raise ValueError("all weighted norms in the fit range vanish")
    x = np.log(lams[used])
    y = np.log(norms[used])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    gamma = -float(slope)
    constant = float(np.max(norms[used] * lams[used] ** gamma))
    return DecayFit(
        exponent=gamma,
        constant=constant,
        rms_residual=float(np.sqrt(np.mean(resid**2))),
        excluded=excluded,
        fit_lo=n_lo,
        fit_hi=n_hi,
    )


@dataclass
class GapProfile:
    """Spectral gaps measured against the lambda^(1 - 2/m) envelope."""

    gaps: np.ndarray
    ratios: np.ndarray
    inf_ratio: float
    distinct_bins: np.ndarray
    singleton_start: int


def gap_profile(eig, m):
    """Consecutive gaps, their ratio to lambda^(1-2/m), and bin occupancy.

    singleton_start is the smallest 1-based index from which every
    consecutive pair of eigenvalues lands in distinct unit bins.
    """
    m = float(m)
    if not (np.isfinite(m) and m > 0.0):
        raise ValueError("m must be positive and finite")
    energies = np.asarray(eig.energies, dtype=float)
    if energies.shape[0] < 2:
        return GapProfile(
            gaps=np.empty(0),
            ratios=np.empty(0),
            inf_ratio=float("inf"),
            distinct_bins=np.empty(0, dtype=bool),
            singleton_start=1,
        )
    if np.any(energies <= 0.0):
        raise ValueError("gap profile needs strictly positive eigenvalues")
    gaps = np.diff(energies)
    lam = np.sqrt(energies[:-1])
    ratios = gaps / lam ** (1.0 - 2.0 / m)
    bin_of = np.floor(energies).astype(np.int64)
    distinct = bin_of[1:] != bin_of[:-1]
    shared = np.flatnonzero(~distinct)
    singleton_start = int(shared.max()) + 2 if shared.size else 1
    return GapProfile(
        gaps=gaps,
        ratios=ratios,
        inf_ratio=float(np.min(ratios)),
        distinct_bins=distinct,
        singleton_start=singleton_start,
    )
