"""Time-averaged smoothing functionals: identities, bounds, and routes."""

import dataclasses
import warnings

import numpy as np
import pytest

from specsmooth.eigensolver import EigenSystem, eigen_lowest
from specsmooth.errors import NumericalFailure, TruncationWarning
from specsmooth.operators import (
    PotentialSpec,
    WeightSpec,
    assemble_hamiltonian,
    build_grid,
    grid_from_spacing,
    sample_weight,
)
from specsmooth.smoothing import (
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

TWO_PI = 2.0 * np.pi


def synthetic(energies, half_width=1.0):
    energies = np.asarray(energies, dtype=float)
    n = energies.shape[0]
    grid = build_grid(half_width, n)
    return EigenSystem(
        energies=energies,
        vectors=np.eye(n) / np.sqrt(grid.spacing),
        residuals=np.zeros(n),
        grid=grid,
    )


@pytest.fixture(scope="module")
def box():
    grid = grid_from_spacing(1.0, 0.002)
    ham = assemble_hamiltonian(PotentialSpec.custom(np.zeros(grid.n_points)), grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        eig = eigen_lowest(ham, 40)
    psi = sample_weight(WeightSpec.indicator(-0.5, 0.5), grid)
    return eig, psi


def test_time_window_exact_points():
    assert time_window_integral(0.0) == TWO_PI
    assert time_window_integral(1.0) == 0.0
    assert time_window_integral(-7.0) == 0.0
    # int_0^{2 pi} e^{-i t / 2} dt = -4i
    assert abs(time_window_integral(0.5) - (-4.0j)) < 1e-14


def test_time_window_against_quadrature():
    mu = 0.3
    t = np.linspace(0.0, TWO_PI, 200001)
    ref = np.trapezoid(np.exp(-1j * t * mu), t)
    assert abs(time_window_integral(mu) - ref) < 1e-8


def test_time_window_conjugate_symmetry():
    rng = np.random.default_rng(2)
    mu = np.concatenate([rng.uniform(-9, 9, 50), [1e-7, -1e-7, 0.25]])
    np.testing.assert_allclose(
        time_window_integral(-mu), np.conj(time_window_integral(mu)), rtol=1e-14
    )


def test_time_window_series_continuity():
    below = time_window_integral(9.999e-7)
    above = time_window_integral(1.0001e-6)
    assert abs(below - above) < 1e-8
    assert isinstance(time_window_integral(0.3), complex)
    vals = time_window_integral(np.array([[0.0, 1.0], [0.5, 2.0]]))
    assert vals.shape == (2, 2)
    with pytest.raises(ValueError):
        time_window_integral(np.array([np.inf]))


def test_mode_frequencies_and_weights():
    eig = synthetic([1.3, 2.6, 3.8])
    np.testing.assert_array_equal(mode_frequencies(eig, "exact"), [1.3, 2.6, 3.8])
    np.testing.assert_array_equal(mode_frequencies(eig, "floor"), [1.0, 2.0, 3.0])
    w = spectral_weights(eig, 1.0, "floor")
    np.testing.assert_allclose(w, (1.0 + np.array([1.0, 4.0, 9.0])) ** 0.25)
    np.testing.assert_array_equal(spectral_weights(eig, 0.0), np.ones(3))
    with pytest.raises(ValueError):
        mode_frequencies(eig, "rounded")
    with pytest.raises(ValueError):
        mode_frequencies(synthetic([-0.5, 1.0, 2.0]), "floor")
    with pytest.raises(ValueError):
        spectral_weights(eig, -0.5)


def test_evolve_unitary_and_periodic():
    eig = synthetic([1.3, 2.6, 3.8, 7.2])
    rng = np.random.default_rng(4)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    np.testing.assert_array_equal(evolve(eig, c, 0.0), c)
    moved = evolve(eig, c, 1.7)
    np.testing.assert_allclose(np.abs(moved), np.abs(c), rtol=1e-14)
    # floor dynamics is 2 pi periodic
    np.testing.assert_allclose(evolve(eig, c, TWO_PI, "floor"), c, atol=1e-12)


def test_quadratic_form_structure(box):
    eig, psi = box
    q = quadratic_form(eig, psi, 0.7)
    assert np.array_equal(q, q.conj().T)
    vals = np.linalg.eigvalsh(q)
    assert vals[0] >= -1e-10 * vals[-1]


def test_floor_form_is_block_diagonal():
    eig = synthetic([1.3, 1.6, 3.8, 5.2])
    # mix the first two eigenvectors so their weighted overlap is nonzero
    rot = np.eye(4)
    rot[0, 0] = rot[1, 1] = np.cos(0.6)
    rot[0, 1], rot[1, 0] = -np.sin(0.6), np.sin(0.6)
    eig = EigenSystem(
        energies=eig.energies,
        vectors=rot / np.sqrt(eig.grid.spacing),
        residuals=eig.residuals,
        grid=eig.grid,
    )
    psi = np.array([0.9, 1.4, 0.3, 1.0])
    q = quadratic_form(eig, psi, 0.5, dynamics="floor")
    # modes 0,1 share bin 1; all couplings to bins 3 and 5 vanish exactly
    assert q[0, 2] == 0.0 and q[1, 3] == 0.0 and q[2, 3] == 0.0
    assert q[0, 1] != 0.0


def test_scaling_homogeneity(box):
    eig, psi = box
    rng = np.random.default_rng(6)
    c = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    base = smoothing_closed_form(eig, psi, 0.5, c)
    scaled = smoothing_closed_form(eig, psi, 0.5, (2.0 - 1.0j) * c)
    assert scaled == pytest.approx(abs(2.0 - 1.0j) * base, rel=1e-12)


def test_single_mode_identity(box):
    # S(phi_n) = sqrt(2 pi) <lambda_n^2>^(gamma/2) ||psi phi_n||
    eig, psi = box
    gamma = 0.5
    h = eig.grid.spacing
    for k in (0, 7, 25):
        c = np.zeros(40, dtype=complex)
        c[k] = 1.0
        s = smoothing_closed_form(eig, psi, gamma, c)
        ref = (
            np.sqrt(TWO_PI)
            * spectral_weights(eig, gamma)[k]
            * np.sqrt(h * np.sum((psi * eig.vectors[:, k]) ** 2))
        )
        assert s == pytest.approx(ref, rel=1e-12)


def test_quadrature_agrees_on_complex_input(box):
    # complex cross terms distinguish I(mu_n - mu_m) from its conjugate;
    # the quadrature route has no overlap matrix to get wrong
    eig, psi = box
    c = np.zeros(40, dtype=complex)
    c[0], c[2] = 1.0, 0.8j
    closed = smoothing_closed_form(eig, psi, 0.5, c)
    quad = smoothing_quadrature(eig, psi, 0.5, c, nodes=4096)
    assert quad == pytest.approx(closed, rel=1e-5)


def test_quadrature_exact_for_integer_frequencies(box):
    # keep only the lowest modes so every integer frequency difference stays
    # below the node count; the trapezoid rule is then exact, not just close
    eig, psi = box
    small = dataclasses.replace(
        eig,
        energies=eig.energies[:4],
        vectors=eig.vectors[:, :4],
        residuals=eig.residuals[:4],
    )
    rng = np.random.default_rng(8)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    closed = smoothing_closed_form(small, psi, 0.3, c, dynamics="floor")
    quad = smoothing_quadrature(small, psi, 0.3, c, dynamics="floor", nodes=64)
    assert quad == pytest.approx(closed, abs=1e-12 * max(1.0, closed))


def test_quadrature_validation(box):
    eig, psi = box
    c = np.zeros(40, dtype=complex)
    with pytest.raises(ValueError):
        smoothing_quadrature(eig, psi, 0.5, c, nodes=4)
    with pytest.raises(ValueError):
        smoothing_quadrature(eig, psi[:-1], 0.5, c)
    with pytest.raises(ValueError):
        smoothing_closed_form(eig, psi, 0.5, np.zeros(39))
    with pytest.raises(ValueError):
        smoothing_closed_form(eig, psi, 0.5, np.full(40, np.nan))


def test_parseval_two_mode_example():
    eig = synthetic([1.3, 2.6, 3.8, 5.1])
    c = np.array([1.0, 1.0, 0.0, 0.0], dtype=complex)
    report = parseval_identity(eig, np.ones(4), 0.0, c)
    assert report.lhs_sq == pytest.approx(4.0 * np.pi, rel=1e-12)
    assert report.rhs_sq == pytest.approx(4.0 * np.pi, rel=1e-12)
    assert report.rel_gap < 1e-12
    assert sum(report.per_bin.values()) == pytest.approx(report.rhs_sq)


def test_parseval_random_vectors(box):
    eig, psi = box
    rng = np.random.default_rng(10)
    for _ in range(5):
        c = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        report = parseval_identity(eig, psi, 0.8, c)
        assert report.rel_gap < 1e-10


def test_parseval_zero_vector():
    eig = synthetic([1.3, 2.6, 3.8])
    report = parseval_identity(eig, np.ones(3), 0.5, np.zeros(3, dtype=complex))
    assert report.lhs_sq == 0.0
    assert report.rhs_sq == 0.0
    assert report.rel_gap == 0.0


def test_constant_flat_spectrum_is_sqrt_two_pi():
    eig = synthetic([1.3, 2.6, 3.8, 5.1, 6.4])
    got = smoothing_constant(eig, np.ones(5), 0.0)
    assert got.constant == pytest.approx(np.sqrt(TWO_PI), rel=1e-12)
    assert got.iterations >= 1


def test_constant_dominates_random_vectors(box):
    eig, psi = box
    gamma = 0.5
    got = smoothing_constant(eig, psi, gamma, dynamics="floor", weight_operator="floor")
    form = quadratic_form(eig, psi, gamma, "floor", "floor")
    rng = np.random.default_rng(12)
    for _ in range(100):
        c = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        s = smoothing_closed_form(eig, psi, gamma, c, form=form)
        assert s <= got.constant * np.linalg.norm(c) * (1.0 + 1e-10)


def test_constant_maximizer_attains(box):
    eig, psi = box
    got = smoothing_constant(eig, psi, 0.5, dynamics="floor", weight_operator="floor")
    assert np.linalg.norm(got.maximizer) == pytest.approx(1.0, rel=1e-12)
    s = smoothing_closed_form(
        eig, psi, 0.5, got.maximizer, dynamics="floor", weight_operator="floor"
    )
    assert s == pytest.approx(got.constant, rel=1e-8)
    assert np.all(np.diff(got.history) >= -1e-9 * abs(got.top_value))


def test_weight_swap_sandwiches_constant(box):
    # exact and floored weights differ by a diagonal factor in [1, 2^(gamma/2)]
    eig, psi = box
    gamma = 1.2
    c_floor = smoothing_constant(eig, psi, gamma, "exact", "floor").constant
    c_exact = smoothing_constant(eig, psi, gamma, "exact", "exact").constant
    assert c_floor <= c_exact * (1.0 + 1e-8)
    assert c_exact <= 2.0 ** (gamma / 2.0) * c_floor * (1.0 + 1e-8)


def test_constant_failure_carries_last_value(box):
    eig, psi = box
    with pytest.raises(NumericalFailure) as info:
        smoothing_constant(
            eig, psi, 0.5, max_iter=1, block_size=1, tol=1e-16, seed=99
        )
    assert info.value.last_value is not None


def test_constant_validation(box):
    eig, psi = box
    with pytest.raises(ValueError):
        smoothing_constant(eig, psi, 0.5, tol=0.0)
    with pytest.raises(ValueError):
        smoothing_constant(eig, psi, 0.5, max_iter=0)
    with pytest.raises(ValueError):
        smoothing_constant(eig, psi, 0.5, dynamics="midpoint")
    solo = synthetic([2.5, 3.5, 4.5])
    one = EigenSystem(
        energies=solo.energies[:1],
        vectors=solo.vectors[:, :1],
        residuals=solo.residuals[:1],
        grid=solo.grid,
    )
    with pytest.raises(ValueError):
        smoothing_constant(one, np.ones(3), 0.5)


def test_discrepancy_zero_for_integer_spectrum():
    eig = synthetic([1.0, 2.0, 5.0, 7.0])
    rng = np.random.default_rng(14)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    report = dynamics_discrepancy(eig, np.ones(4), 0.5, c, floor_constant=3.0)
    assert report.discrepancy == 0.0
    assert report.bound == 0.0
    assert report.within_bound


def test_discrepancy_within_bound(box):
    eig, psi = box
    gamma = 0.5
    fc = smoothing_constant(eig, psi, gamma, dynamics="floor", weight_operator="exact")
    rng = np.random.default_rng(16)
    for _ in range(20):
        c = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        report = dynamics_discrepancy(eig, psi, gamma, c, floor_constant=fc.constant)
        assert report.within_bound
        assert report.floor_constant == fc.constant
        assert report.discrepancy == abs(report.value_exact - report.value_floor)


def test_discrepancy_quadrature_route(box):
    eig, psi = box
    rng = np.random.default_rng(18)
    c = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    closed = dynamics_discrepancy(eig, psi, 0.5, c, floor_constant=5.0)
    # node count must exceed twice the largest frequency difference (~3945)
    quad = dynamics_discrepancy(eig, psi, 0.5, c, nodes=8192, floor_constant=5.0)
    assert quad.within_bound
    assert quad.value_exact == pytest.approx(closed.value_exact, rel=1e-5)
    assert quad.value_floor == pytest.approx(closed.value_floor, rel=1e-12)
