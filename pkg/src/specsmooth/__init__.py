"""Desk-scale numerics for smoothing estimates of confined 1-d
Schrodinger operators and the decay of their spectral projections.

The package discretises -d^2/dx^2 + V on a truncated interval, computes
the low spectrum with its own tridiagonal eigensolver, bins eigenvalues
into unit spectral windows, and measures time-averaged weighted
smoothing functionals against their closed spectral forms.
"""

from .errors import (
    BinBoundaryWarning,
    NumericalFailure,
    SelfCheckError,
    TruncationWarning,
)
from .operators import (
    ConfinementReport,
    Grid,
    PotentialSpec,
    TridiagonalHamiltonian,
    WeightSpec,
    assemble_hamiltonian,
    bracket,
    build_grid,
    check_confinement,
    grid_from_spacing,
    sample_potential,
    sample_weight,
)
from .eigensolver import (
    ConvergenceTable,
    EigenSystem,
    convergence_table,
    count_below,
    eigen_lowest,
    residual_check,
    resolve_threads,
)
from .projectors import (
    DecayFit,
    DecayReport,
    GapProfile,
    SpectralBins,
    apply_projector,
    bin_spectrum,
    fit_decay_exponent,
    floor_deviation,
    gap_profile,
    weighted_decay,
)
from .smoothing import (
    DiscrepancyReport,
    ParsevalReport,
    SmoothingConstant,
    dynamics_discrepancy,
    evolve,
    mode_frequencies,
    parseval_identity,
    quadratic_form,
    smoothing_closed_form,
    smoothing_constant,
    smoothing_quadrature,
    spectral_weights,
    time_window_integral,
)
from .free import (
    BandParams,
    KernelBoundReport,
    band_kernel,
    band_params,
    theta_exponent,
    uniform_bound_check,
    weighted_band_kernel,
)
from . import kernels

__version__ = "0.1.0"
