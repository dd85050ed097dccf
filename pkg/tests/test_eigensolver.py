"""Eigensolver accuracy, orthonormality, determinism, and self-checks."""

import dataclasses
import warnings

import numpy as np
import pytest

from specsmooth.eigensolver import (
    convergence_table,
    count_below,
    eigen_lowest,
    residual_check,
    resolve_threads,
)
from specsmooth.errors import SelfCheckError, TruncationWarning
from specsmooth.operators import (
    PotentialSpec,
    assemble_hamiltonian,
    build_grid,
    grid_from_spacing,
)


def box_hamiltonian(n_points=63, half_width=1.0):
    grid = build_grid(half_width, n_points)
    return assemble_hamiltonian(PotentialSpec.custom(np.zeros(n_points)), grid)


@pytest.fixture(scope="module")
def harmonic_eig():
    grid = grid_from_spacing(10.0, 0.02)
    ham = assemble_hamiltonian(PotentialSpec.harmonic(), grid)
    return ham, eigen_lowest(ham, 12)


def test_box_matches_discrete_formula():
    # zero potential: eigenvalues of the pure FD Laplacian are known
    # exactly, (4/h^2) sin^2(j pi / (2(n+1)))
    ham = box_hamiltonian()
    n = ham.n
    h = ham.grid.spacing
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        eig = eigen_lowest(ham, 10)
    j = np.arange(1, 11)
    exact = (4.0 / h**2) * np.sin(j * np.pi / (2.0 * (n + 1))) ** 2
    np.testing.assert_allclose(eig.energies, exact, rtol=1e-12)


def test_box_eigenvectors_are_discrete_sines():
    ham = box_hamiltonian(n_points=40)
    n = ham.n
    h = ham.grid.spacing
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        eig = eigen_lowest(ham, 4)
    i = np.arange(1, n + 1)
    for j in range(1, 5):
        ref = np.sin(j * np.pi * i / (n + 1))
        ref /= np.sqrt(h) * np.linalg.norm(ref)
        overlap = h * np.dot(eig.vectors[:, j - 1], ref)
        assert abs(abs(overlap) - 1.0) < 1e-10


def test_harmonic_low_modes(harmonic_eig):
    _, eig = harmonic_eig
    odd = 2.0 * np.arange(1, 13) - 1.0
    np.testing.assert_allclose(eig.energies, odd, rtol=5e-3)


def test_harmonic_parity(harmonic_eig):
    # eigenfunctions alternate even/odd about the origin
    _, eig = harmonic_eig
    for j in range(eig.count):
        v = eig.vectors[:, j]
        sign = 1.0 if j % 2 == 0 else -1.0
        np.testing.assert_allclose(v[::-1], sign * v, atol=1e-8)


def test_orthonormality(harmonic_eig):
    _, eig = harmonic_eig
    gram = eig.grid.spacing * (eig.vectors.T @ eig.vectors)
    np.testing.assert_allclose(gram, np.eye(eig.count), atol=1e-10)


def test_sign_convention(harmonic_eig):
    _, eig = harmonic_eig
    for j in range(eig.count):
        col = eig.vectors[:, j]
        lead = np.flatnonzero(np.abs(col) > 1e-8)[0]
        assert col[lead] > 0.0


def test_residuals_small_and_checked(harmonic_eig):
    ham, eig = harmonic_eig
    scale = np.abs(ham.diagonal).max()
    assert np.all(eig.residuals <= 1e-8 * scale)
    fresh = residual_check(ham, eig)
    assert fresh.shape == (eig.count,)


def test_residual_check_detects_tampering(harmonic_eig):
    ham, eig = harmonic_eig
    bad = dataclasses.replace(eig, energies=eig.energies + 1.0)
    with pytest.raises(SelfCheckError):
        residual_check(ham, bad)


def test_residual_check_grid_mismatch(harmonic_eig):
    _, eig = harmonic_eig
    other = box_hamiltonian(n_points=21)
    with pytest.raises(ValueError):
        residual_check(other, eig)


def test_count_below_consistent(harmonic_eig):
    ham, eig = harmonic_eig
    for k in (1, 5, 11):
        mid = 0.5 * (eig.energies[k - 1] + eig.energies[k])
        assert count_below(ham, mid) == k


def test_near_degenerate_double_well():
    # deep double well: the lowest pairs split by tunneling only, far
    # below the cluster tolerance, exercising the clustered path
    grid = grid_from_spacing(4.0, 0.01)
    v = 400.0 * (grid.points**2 - 1.0) ** 2
    ham = assemble_hamiltonian(PotentialSpec.custom(v), grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        eig = eigen_lowest(ham, 4)
    gap01 = eig.energies[1] - eig.energies[0]
    assert gap01 < 1e-6 * eig.energies[0]
    gram = eig.grid.spacing * (eig.vectors.T @ eig.vectors)
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-9)
    residual_check(ham, eig)


def test_thread_count_does_not_change_bits(harmonic_eig):
    ham, eig = harmonic_eig
    again = eigen_lowest(ham, 12, threads=1)
    four = eigen_lowest(ham, 12, threads=4)
    assert np.array_equal(eig.energies, again.energies)
    assert np.array_equal(again.energies, four.energies)
    assert np.array_equal(again.vectors, four.vectors)


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("SPECSMOOTH_THREADS", "3")
    assert resolve_threads() == 3
    monkeypatch.setenv("SPECSMOOTH_THREADS", "0")
    assert resolve_threads() >= 1
    monkeypatch.setenv("SPECSMOOTH_THREADS", "zebra")
    with pytest.raises(ValueError):
        resolve_threads()
    monkeypatch.delenv("SPECSMOOTH_THREADS")
    assert resolve_threads(2) == 2
    with pytest.raises(ValueError):
        resolve_threads(-1)


def test_count_validation():
    ham = box_hamiltonian(n_points=11)
    with pytest.raises(ValueError):
        eigen_lowest(ham, 0)
    with pytest.raises(ValueError):
        eigen_lowest(ham, 12)


def test_truncation_warning_fires():
    # edge potential far below the top requested eigenvalue
    grid = grid_from_spacing(4.0, 0.02)
    ham = assemble_hamiltonian(PotentialSpec.harmonic(), grid)
    with pytest.warns(TruncationWarning):
        eigen_lowest(ham, 20)


def test_convergence_table_second_order():
    table = convergence_table(
        PotentialSpec.harmonic(), 10.0, [0.08, 0.04, 0.02], 6
    )
    assert table.energies.shape == (3, 6)
    assert np.all(np.abs(table.observed_order - 2.0) < 0.2)
    odd = 2.0 * np.arange(1, 7) - 1.0
    np.testing.assert_allclose(table.extrapolated, odd, rtol=1e-3)


def test_convergence_table_validation():
    with pytest.raises(ValueError):
        convergence_table(PotentialSpec.harmonic(), 10.0, [0.08, 0.04], 4)
    with pytest.raises(ValueError):
        convergence_table(PotentialSpec.harmonic(), 10.0, [0.04, 0.04, 0.02], 4)


def test_coefficients_synthesize_roundtrip(harmonic_eig):
    _, eig = harmonic_eig
    rng = np.random.default_rng(5)
    c = rng.standard_normal(eig.count)
    f = eig.synthesize(c)
    back = eig.coefficients(f)
    np.testing.assert_allclose(back, c, atol=1e-10)
    with pytest.raises(ValueError):
        eig.coefficients(np.ones(3))
    with pytest.raises(ValueError):
        eig.synthesize(np.ones(eig.count + 1))
