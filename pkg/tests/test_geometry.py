import numpy as np
import pytest
from hypothesis import given, strategies as st

from moire_spectra.geometry import (Commensurate, KPoint, Lattice, NoWitnessUpTo, ProductCell,
                                    incommensurability_check, kgrid, reciprocal, wrap_k)


def test_reciprocal_scalar():
    np.testing.assert_allclose(reciprocal(Lattice([[1.0]])).basis, [[2 * np.pi]])


def test_reciprocal_identity():
    np.testing.assert_allclose(reciprocal(Lattice(np.eye(2))).basis, 2 * np.pi * np.eye(2))


def test_reciprocal_triangular():
    A = np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]])
    B = reciprocal(Lattice(A)).basis
    np.testing.assert_allclose(B.T @ A, 2 * np.pi * np.eye(2), atol=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_reciprocal_twice_scales_back(entries):
    A = np.array(entries).reshape(2, 2)
    if abs(np.linalg.det(A)) < 0.1:
        return
    B = reciprocal(Lattice(A)).basis
    np.testing.assert_allclose(reciprocal(Lattice(B)).basis, A, atol=1e-12)


def test_lattice_rejects_singular():
    with pytest.raises(ValueError):
        Lattice([[1.0, 2.0], [2.0, 4.0]])


def test_identical_lattices_commensurate():
    v = incommensurability_check(Lattice([[1.0]]), Lattice([[1.0]]))
    assert v == Commensurate((1,), (1,), 100)


def test_half_lattice_witness():
    v = incommensurability_check(Lattice([[1.0]]), Lattice([[0.5]]), qmax=4)
    assert isinstance(v, Commensurate)
    assert (v.m, v.n) == ((2,), (1,))


def test_sqrt2_no_witness():
    v = incommensurability_check(Lattice([[1.0]]), Lattice([[np.sqrt(2)]]), qmax=100, tol=1e-9)
    assert v == NoWitnessUpTo(100)


def test_golden_no_witness(cell):
    assert incommensurability_check(cell.lat1, cell.lat2) == NoWitnessUpTo(100)


def test_twisted_2d_witness_for_rational_scale():
    v = incommensurability_check(Lattice(np.eye(2)), Lattice(1.5 * np.eye(2)), qmax=5)
    assert isinstance(v, Commensurate)
    B1 = reciprocal(Lattice(np.eye(2))).basis
    B2 = reciprocal(Lattice(1.5 * np.eye(2))).basis
    np.testing.assert_allclose(B1 @ v.m, B2 @ v.n, atol=1e-9)


def test_qmax_must_be_positive():
    with pytest.raises(ValueError):
        incommensurability_check(Lattice([[1.0]]), Lattice([[2.0]]), qmax=0)


def test_kgrid_single_midpoint(cell):
    (kp,) = kgrid(cell, 1)
    np.testing.assert_allclose(kp.frac, [0.5, 0.5])


def test_kgrid_two_per_axis(cell):
    pts = {tuple(p.frac) for p in kgrid(cell, 2)}
    assert pts == {(a, b) for a in (0.25, 0.75) for b in (0.25, 0.75)}


def test_kgrid_2d_count(square_cell):
    assert len(kgrid(square_cell, 2)) == 16


@given(st.integers(1, 6))
def test_kgrid_points_inside_cell(n):
    c = ProductCell(Lattice([[1.0]]), Lattice([[1.3]]))
    frac = np.array([p.frac for p in kgrid(c, n)])
    assert frac.shape == (n * n, 2)
    assert np.all((frac > 0) & (frac < 1))


def test_wrap_single_period():
    c = ProductCell(Lattice([[1.0]]), Lattice([[1.0]]))
    kp = wrap_k(c, [2 * np.pi + 0.3, 0.0])
    np.testing.assert_allclose(kp.k, [0.3 / (2 * np.pi)])


def test_wrap_identity(cell):
    kp = KPoint([0.2], [0.7])
    k, kk = cell.cartesian(kp)
    np.testing.assert_allclose(wrap_k(cell, k, kk).frac, kp.frac, atol=1e-14)


def test_wrap_negative():
    np.testing.assert_allclose(KPoint.wrapped([-0.1], [0.0]).k, [0.9])


def test_kpoint_rejects_outside_cell():
    with pytest.raises(ValueError):
        KPoint([1.2], [0.0])


@given(st.floats(-50, 50), st.floats(-50, 50), st.integers(-5, 5), st.integers(-5, 5))
def test_wrap_is_invariant_under_reciprocal_shifts(k, kp, s1, s2):
    c = ProductCell(Lattice([[1.0]]), Lattice([[1.7]]))
    a = wrap_k(c, [k, kp])
    b = wrap_k(c, [k + 2 * np.pi * s1, kp + 2 * np.pi / 1.7 * s2])
    d = np.abs(a.frac - b.frac)
    assert np.all(np.minimum(d, 1 - d) < 1e-9)
