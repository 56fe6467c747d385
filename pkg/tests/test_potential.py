import numpy as np
import pytest
from hypothesis import given, strategies as st

from moire_spectra.geometry import Lattice
from moire_spectra.potential import (AliasingError, CorruptedCoefficientsError, FourierPotential,
                                     evaluate, from_samples, load_samples, pair_indexing,
                                     sample_grid)

from conftest import random_potential

LAT1 = Lattice([[1.0]])


def test_cosine_at_origin():
    V = FourierPotential.cosine(LAT1, 2.0, [1])
    assert evaluate(V, [0.0]) == pytest.approx(2.0)


def test_cosine_at_quarter():
    V = FourierPotential.cosine(LAT1, 2.0, [1])
    assert evaluate(V, [0.25]) == pytest.approx(0.0, abs=1e-14)


def test_constant_everywhere():
    V = FourierPotential.constant(LAT1, 1.5)
    np.testing.assert_allclose(evaluate(V, np.linspace(-3, 3, 11)[:, None]), 1.5)


def test_from_samples_constant():
    V = from_samples(LAT1, np.full(8, 3.0))
    assert V[(0,)] == pytest.approx(3.0)
    assert set(V.coeffs) == {(0,)}


def test_from_samples_cosine():
    x = sample_grid(LAT1, 8)[:, 0]
    V = from_samples(LAT1, 2 * np.cos(2 * np.pi * x))
    assert abs(V[(1,)] - 1) < 1e-12
    assert abs(V[(-1,)] - 1) < 1e-12
    assert set(V.coeffs) == {(1,), (-1,)}


def test_from_samples_aliasing():
    with pytest.raises(AliasingError):
        from_samples(LAT1, np.zeros(6), radius=3)


@given(st.integers(0, 2**31))
def test_from_samples_random_is_hermitian(seed):
    rng = np.random.default_rng(seed)
    V = from_samples(Lattice(np.eye(2)), rng.standard_normal(25))
    for m, c in V.coeffs.items():
        assert V[tuple(-x for x in m)] == np.conj(c)


def test_from_samples_reproduces_samples():
    lat = Lattice([[1.0, 0.3], [0.0, 0.9]])
    rng = np.random.default_rng(4)
    s = rng.standard_normal(49)
    V = from_samples(lat, s)
    np.testing.assert_allclose(evaluate(V, sample_grid(lat, 7)), s, atol=1e-12)


def test_load_samples(tmp_path):
    f = tmp_path / "v.txt"
    f.write_text("1.0\n2.0\n3.0\n")
    np.testing.assert_array_equal(load_samples(f), [1.0, 2.0, 3.0])


def test_rejects_non_hermitian():
    with pytest.raises(CorruptedCoefficientsError):
        FourierPotential(LAT1, {(1,): 1.0, (-1,): 2.0})


def test_rejects_nan():
    with pytest.raises(CorruptedCoefficientsError):
        FourierPotential(LAT1, {(0,): np.nan})


def test_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        FourierPotential(LAT1, {(1, 0): 1.0})


def test_pair_zero():
    z = FourierPotential.zero(LAT1)
    P = pair_indexing(z, z)
    offsets, values = P.stencil()
    assert len(values) == 0
    assert P((1,), (0,)) == 0


def test_pair_constants_add():
    P = pair_indexing(FourierPotential.constant(LAT1, 0.5), FourierPotential.constant(LAT1, 1.25))
    assert P((0,), (0,)) == 1.75


def test_pair_five_entries():
    V1 = FourierPotential.cosine(LAT1, 2.0, [1])
    V2 = FourierPotential.cosine(LAT1, 1.0, [1])
    offsets, _ = pair_indexing(V1, V2).stencil()
    assert len(offsets) == 4
    V1c = V1 + FourierPotential.constant(LAT1, 1.0)
    offsets, values = pair_indexing(V1c, V2).stencil()
    assert len(offsets) == 5
    assert sorted(map(tuple, offsets)) == [(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]


def test_pair_constants_cancel():
    P = pair_indexing(FourierPotential.constant(LAT1, 1.0), FourierPotential.constant(LAT1, -1.0))
    offsets, _ = P.stencil()
    assert len(offsets) == 0


@given(st.integers(0, 2**31), st.integers(-4, 4), st.floats(-5, 5))
def test_evaluate_periodic(seed, nu, x):
    lat = Lattice([[1.3]])
    V = random_potential(np.random.default_rng(seed), lat, 3)
    assert abs(evaluate(V, [x + 1.3 * nu]) - evaluate(V, [x])) <= 1e-10


@given(st.integers(0, 2**31))
def test_evaluate_is_real_for_hermitian(seed):
    V = random_potential(np.random.default_rng(seed), Lattice(np.eye(2)), 2)
    vals = evaluate(V, np.random.default_rng(seed + 1).uniform(-3, 3, (20, 2)))
    assert vals.dtype == float
