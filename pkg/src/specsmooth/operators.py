"""Grids, confining potentials, spatial weights, and the discrete operator.

The continuum object is a 1-d Schrodinger operator -d^2/dx^2 + V(x) on
the line, truncated to [-L, L] with Dirichlet ends and discretised by
3-point finite differences on a uniform interior grid.  Everything
downstream (eigensolver, projector bins, smoothing functionals) works
with the resulting symmetric tridiagonal matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POTENTIAL_KINDS = ("harmonic", "bracket_power", "custom_samples")
WEIGHT_KINDS = ("constant_one", "indicator", "inverse_power", "custom_samples")


def bracket(s):
    """Japanese bracket (1 + s^2)^(1/2), elementwise."""
    s = np.asarray(s, dtype=float)
    return np.sqrt(1.0 + s * s)


@dataclass
class Grid:
    """Uniform interior grid on (-L, L) with Dirichlet endpoints excluded.

    spacing h = 2L/(n_points + 1); the points are x_i = -L + i*h for
    i = 1..n_points, so both boundary values sit exactly one spacing
    outside the stored points.
    """

    half_width: float
    n_points: int
    spacing: float = field(init=False)
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError("half_width must be positive and finite")
        n = self.n_points
        if int(n) != n or n < 3:
            raise ValueError("n_points must be an integer >= 3")
        self.n_points = int(n)
        self.spacing = 2.0 * self.half_width / (self.n_points + 1)
        self.points = -self.half_width + self.spacing * np.arange(
            1, self.n_points + 1
        )


def build_grid(half_width, n_points):
    """Construct the uniform interior grid for the truncated line."""
    return Grid(float(half_width), n_points)


def grid_from_spacing(half_width, spacing):
    """Grid whose spacing is as close as possible to the one requested.

    The actual spacing is recomputed from the rounded point count, so it
    matches the request exactly whenever 2*half_width/spacing is an
    integer.
    """
    if not (np.isfinite(spacing) and spacing > 0):
        raise ValueError("spacing must be positive and finite")
    n_points = int(round(2.0 * float(half_width) / float(spacing))) - 1
    if n_points < 3:
        raise ValueError("spacing too coarse for this half_width")
    return Grid(float(half_width), n_points)


@dataclass
class PotentialSpec:
    """Confining potential family.

    kinds:
      harmonic        V(x) = x^2                      (growth exponent 2)
      bracket_power   V(x) = (1 + x^2)^(k/2)          (growth exponent k)
      custom_samples  nonnegative user samples, one per grid point

    convexity_exponent is the exponent m in the gap estimates; when set
    it must satisfy 2 < m <= growth_exponent.
    """

    kind: str
    growth_exponent: float = 2.0
    convexity_exponent: float | None = None
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        k = float(self.growth_exponent)
        if not (np.isfinite(k) and k > 0):
            raise ValueError("growth_exponent must be positive and finite")
        self.growth_exponent = k
        if self.kind == "harmonic" and k != 2.0:
            raise ValueError("harmonic potential has growth_exponent 2")
        if self.kind == "custom_samples":
            if self.samples is None:
                raise ValueError("custom_samples potential needs samples")
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or not np.all(np.isfinite(s)):
                raise ValueError("potential samples must be a finite 1-d array")
            if np.any(s < 0):
                raise ValueError("potential samples must be nonnegative")
            self.samples = s
        m = self.convexity_exponent
        if m is not None:
            m = float(m)
            if not (2.0 < m <= k):
                raise ValueError(
                    "convexity_exponent must satisfy 2 < m <= growth_exponent"
                )
            self.convexity_exponent = m

    @classmethod
    def harmonic(cls):
        return cls(kind="harmonic", growth_exponent=2.0)

    @classmethod
    def bracket_power(cls, growth_exponent, convexity_exponent=None):
        return cls(
            kind="bracket_power",
            growth_exponent=growth_exponent,
            convexity_exponent=convexity_exponent,
        )

    @classmethod
    def custom(cls, samples):
        samples = np.asarray(samples, dtype=float)
        return cls(kind="custom_samples", growth_exponent=2.0, samples=samples)


def sample_potential(spec, grid):
    """Evaluate the potential on the grid points."""
    x = grid.points
    if spec.kind == "harmonic":
        return x * x
    if spec.kind == "bracket_power":
        return bracket(x) ** spec.growth_exponent
    if len(spec.samples) != grid.n_points:
        raise ValueError(
            f"potential samples have length {len(spec.samples)}, "
            f"grid has {grid.n_points} points"
        )
    return spec.samples.copy()


@dataclass
class WeightSpec:
    """Spatial weight family.

    kinds:
      constant_one    1 everywhere
      indicator       characteristic function of [a, b], endpoints included
      inverse_power   (1 + x^2)^(-(1/2 + nu)/2) for decay rate nu > 0
      custom_samples  finite user samples, one per grid point
    """

    kind: str
    lower: float = 0.0
    upper: float = 0.0
    decay: float = 0.0
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "indicator":
            a, b = float(self.lower), float(self.upper)
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValueError("indicator needs finite endpoints with lower < upper")
            self.lower, self.upper = a, b
        if self.kind == "inverse_power":
            nu = float(self.decay)
            if not (np.isfinite(nu) and nu > 0):
                raise ValueError("inverse_power decay rate must be positive")
            self.decay = nu
        if self.kind == "custom_samples":
            if self.samples is None:
                raise ValueError("custom_samples weight needs samples")
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or not np.all(np.isfinite(s)):
                raise ValueError("weight samples must be a finite 1-d array")
            self.samples = s

    @classmethod
    def constant_one(cls):
        return cls(kind="constant_one")

    @classmethod
    def indicator(cls, lower, upper):
        return cls(kind="indicator", lower=lower, upper=upper)

    @classmethod
    def inverse_power(cls, decay):
        return cls(kind="inverse_power", decay=decay)

    @classmethod
    def custom(cls, samples):
        samples = np.asarray(samples, dtype=float)
        return cls(kind="custom_samples", samples=samples)


def sample_weight(spec, grid):
    """Evaluate the weight on the grid points."""
    x = grid.points
    if spec.kind == "constant_one":
        return np.ones_like(x)
    if spec.kind == "indicator":
        return ((x >= spec.lower) & (x <= spec.upper)).astype(float)
    if spec.kind == "inverse_power":
        return bracket(x) ** (-(0.5 + spec.decay))
    if len(spec.samples) != grid.n_points:
        raise ValueError(
            f"weight samples have length {len(spec.samples)}, "
            f"grid has {grid.n_points} points"
        )
    return spec.samples.copy()


@dataclass
class TridiagonalHamiltonian:
    """Symmetric tridiagonal discretisation of -d^2/dx^2 + V.

    diagonal[i] = 2/h^2 + V(x_i); every off-diagonal entry equals the
    single scalar -1/h^2, stored once so symmetry holds by construction.
    """

    diagonal: np.ndarray
    off_diagonal: float
    grid: Grid
    potential: np.ndarray

    @property
    def n(self):
        return self.grid.n_points

    def apply(self, v):
        """Matrix-vector product; accepts (n,) or (n, m) column stacks."""
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise ValueError("vector length does not match the grid")
        d = self.diagonal if v.ndim == 1 else self.diagonal[:, None]
        y = d * v
        e = self.off_diagonal
        y[:-1] += e * v[1:]
        y[1:] += e * v[:-1]
        return y

    def gershgorin(self):
        """Enclosing interval for the whole spectrum."""
        r = np.full(self.n, 2.0 * abs(self.off_diagonal))
        r[0] = r[-1] = abs(self.off_diagonal)
        return float(np.min(self.diagonal - r)), float(np.max(self.diagonal + r))


def assemble_hamiltonian(spec, grid):
    """Build the discrete operator for a potential on a grid."""
    v = sample_potential(spec, grid)
    h = grid.spacing
    diagonal = 2.0 / h**2 + v
    return TridiagonalHamiltonian(
        diagonal=diagonal,
        off_diagonal=-1.0 / h**2,
        grid=grid,
        potential=v,
    )


@dataclass
class ConfinementReport:
    """Growth and convexity diagnostics for a smooth potential.

    virial_inf is the infimum of x V'(x)/V(x) over grid points with
    |x| >= x0; the potential behaves like |x|^m at infinity only if this
    stays >= m.  second_derivative_min is the minimum of V'' on the same
    set.  The sandwich bounds are min and max of V(x)/<x>^k, and the
    derivative envelopes are sup |V'|/<x>^(k-1) and sup |V''|/<x>^(k-2),
    all finite exactly when V grows at its nominal rate.
    """

    x0: float
    convexity_exponent: float | None
    virial_inf: float
    second_derivative_min: float
    sandwich_lower: float
    sandwich_upper: float
    derivative_envelope_1: float
    derivative_envelope_2: float
    passes: bool | None


def _analytic_derivatives(spec, x):
    # Exact derivatives for the smooth families; preferred over finite
    # differences whenever available.
    if spec.kind == "harmonic":
        return x * x, 2.0 * x, np.full_like(x, 2.0)
    k = spec.growth_exponent
    base = 1.0 + x * x
    v = base ** (k / 2.0)
    v1 = k * x * base ** (k / 2.0 - 1.0)
    v2 = k * base ** (k / 2.0 - 2.0) * (1.0 + (k - 1.0) * x * x)
    return v, v1, v2


def check_confinement(spec, x0, grid, convexity_exponent=None):
    """Probe growth, virial, and convexity of the potential for |x| >= x0.

    The pass flag is evaluated against the convexity exponent m given
    here, falling back to the one carried by the spec; it is None when
    neither is available.  Custom sample potentials have no derivatives
    to probe and are rejected.
    """
    if spec.kind == "custom_samples":
        raise ValueError("check_confinement needs a differentiable potential kind")
    x0 = float(x0)
    if not (np.isfinite(x0) and x0 >= 0):
        raise ValueError("x0 must be finite and nonnegative")
    x = grid.points
    mask = np.abs(x) >= x0
    if not np.any(mask):
        raise ValueError("x0 lies beyond the grid; no points to probe")
    xm = x[mask]
    v, v1, v2 = _analytic_derivatives(spec, xm)
    virial = xm * v1 / v
    k = spec.growth_exponent
    br = bracket(xm)
    sandwich = v / br**k
    env1 = np.abs(v1) / br ** (k - 1.0)
    env2 = np.abs(v2) / br ** (k - 2.0)
    m = convexity_exponent
    if m is None:
        m = spec.convexity_exponent
    virial_inf = float(np.min(virial))
    second_min = float(np.min(v2))
    passes = None
    if m is not None:
        passes = bool(virial_inf >= float(m) and second_min > 0.0)
    return ConfinementReport(
        x0=x0,
        convexity_exponent=None if m is None else float(m),
        virial_inf=virial_inf,
        second_derivative_min=second_min,
        sandwich_lower=float(np.min(sandwich)),
        sandwich_upper=float(np.max(sandwich)),
        derivative_envelope_1=float(np.max(env1)),
        derivative_envelope_2=float(np.max(env2)),
        passes=passes,
    )
