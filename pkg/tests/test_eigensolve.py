import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moire_spectra.eigensolve import EigensolverError, lowest_eigenpairs, make_seed
from moire_spectra.geometry import KPoint, Lattice, ProductCell
from moire_spectra.operator import BlochHamiltonian, PlanewaveBasis, kinetic_diag
from moire_spectra.potential import FourierPotential

from conftest import random_potential


def test_free_particle_zero():
    cell = ProductCell(Lattice([[1.0]]), Lattice([[1.7]]))
    z1, z2 = FourierPotential.zero(cell.lat1), FourierPotential.zero(cell.lat2)
    H = BlochHamiltonian(PlanewaveBasis.box(cell, 2, 2), KPoint([0.0], [0.0]), 1.0, z1, z2)
    res = lowest_eigenpairs(H, 1)
    assert abs(res.eigenvalues[0]) <= 1e-12


def test_two_by_two():
    res = lowest_eigenpairs(np.array([[0.0, 1.0], [1.0, 0.0]]), 2)
    np.testing.assert_allclose(res.eigenvalues, [-1.0, 1.0])


def _monolayer_lowest(k_frac, radius):
    m = np.arange(-radius, radius + 1)
    M = np.diag((2 * np.pi * (k_frac + m)) ** 2) + np.eye(len(m), k=1) + np.eye(len(m), k=-1)
    return np.linalg.eigvalsh(M)[0]


def test_monolayer_match():
    cell = ProductCell(Lattice([[1.0]]), Lattice([[1.0]]))
    V1 = FourierPotential.cosine(cell.lat1, 2.0, [1])
    H = BlochHamiltonian(PlanewaveBasis.box(cell, 8, 8), KPoint([0.0], [0.0]), 1.0, V1,
                         FourierPotential.zero(cell.lat2))
    dense = lowest_eigenpairs(H, 4, path="dense")
    it = lowest_eigenpairs(H, 4, path="iterative", tol=1e-10)
    assert dense.eigenvalues[0] == pytest.approx(_monolayer_lowest(0.0, 8), abs=1e-12)
    np.testing.assert_allclose(it.eigenvalues, dense.eigenvalues, atol=1e-9)
    assert it.path == "iterative"


@settings(max_examples=15)
@given(st.integers(0, 2**31), st.sampled_from([1e-8, 1e-10]))
def test_dense_iterative_agree(seed, tol):
    rng = np.random.default_rng(seed)
    cell = ProductCell(Lattice([[1.0]]), Lattice([[rng.uniform(1.2, 2.4)]]))
    V1 = random_potential(rng, cell.lat1, 2, 0.7)
    V2 = random_potential(rng, cell.lat2, 2, 0.7)
    r = int(rng.integers(4, 10))
    H = BlochHamiltonian(PlanewaveBasis.box(cell, r, r), KPoint(rng.uniform(0, 1, 1), rng.uniform(0, 1, 1)),
                         rng.uniform(0.05, 1.0), V1, V2)
    m = int(rng.integers(1, 9))
    a = lowest_eigenpairs(H, m, path="dense")
    b = lowest_eigenpairs(H, m, path="iterative", tol=tol, seed=seed)
    np.testing.assert_allclose(b.eigenvalues, a.eigenvalues, atol=max(1e-9, 10 * tol))


def test_result_invariants(cell, potentials):
    H = BlochHamiltonian(PlanewaveBasis.box(cell, 10, 10), KPoint([0.4], [0.1]), 0.1, *potentials)
    for path in ("dense", "iterative"):
        r = lowest_eigenpairs(H, 6, path=path, tol=1e-9)
        assert np.all(np.diff(r.eigenvalues) >= 0)
        G = r.eigenvectors.conj().T @ r.eigenvectors
        np.testing.assert_allclose(np.diag(G).real, 1.0, atol=1e-12)
        assert np.max(np.abs(G - np.diag(np.diag(G)))) <= 1e-10
        bound = 1e-9 if path == "iterative" else 1e-10 * max(1.0, np.abs(r.eigenvalues).max())
        assert np.all(r.residual_norms <= bound)


def test_free_eigenvalues_are_kinetic_entries(cell):
    z1, z2 = FourierPotential.zero(cell.lat1), FourierPotential.zero(cell.lat2)
    kp = KPoint([0.3], [0.9])
    H = BlochHamiltonian(PlanewaveBasis.box(cell, 5, 5), kp, 0.2, z1, z2)
    r = lowest_eigenpairs(H, 10)
    np.testing.assert_allclose(r.eigenvalues, np.sort(H.kinetic)[:10], atol=1e-12)


def test_constant_shift(cell):
    z1, z2 = FourierPotential.zero(cell.lat1), FourierPotential.zero(cell.lat2)
    c1, c2 = FourierPotential.constant(cell.lat1, 0.4), FourierPotential.constant(cell.lat2, -1.1)
    basis = PlanewaveBasis.box(cell, 4, 4)
    kp = KPoint([0.25], [0.5])
    a = lowest_eigenpairs(BlochHamiltonian(basis, kp, 0.3, z1, z2), 5).eigenvalues
    b = lowest_eigenpairs(BlochHamiltonian(basis, kp, 0.3, c1, c2), 5).eigenvalues
    np.testing.assert_allclose(b, a - 0.7, atol=1e-12)


def test_nonconvergence_raises(cell, potentials):
    H = BlochHamiltonian(PlanewaveBasis.box(cell, 20, 20), KPoint([0.5], [0.5]), 0.0125, *potentials)
    with pytest.raises(EigensolverError) as err:
        lowest_eigenpairs(H, 8, path="iterative", max_iter=2, tol=1e-12)
    assert err.value.eigenvalues is not None


def test_seeding_is_reproducible(cell, potentials):
    H = BlochHamiltonian(PlanewaveBasis.box(cell, 20, 20), KPoint([0.5], [0.5]), 0.1, *potentials)
    a = lowest_eigenpairs(H, 4, path="iterative", seed=make_seed(3, 1))
    b = lowest_eigenpairs(H, 4, path="iterative", seed=make_seed(3, 1))
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("MOIRE_SPECTRA_SEED", "7")
    assert make_seed(1).entropy == [7, 1]


def test_bad_arguments():
    M = np.eye(3)
    with pytest.raises(ValueError):
        lowest_eigenpairs(M, 4)
    with pytest.raises(ValueError):
        lowest_eigenpairs(M, 1, path="magic")
    with pytest.raises(ValueError):
        lowest_eigenpairs(M, 1, tol=0)
