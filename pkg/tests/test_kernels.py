import numpy as np
import pytest
from hypothesis import given, strategies as st

from moire_spectra import _core, _kernels_py
from moire_spectra.geometry import KPoint
from moire_spectra.operator import BlochHamiltonian, PlanewaveBasis, apply

cython = pytest.mark.skipif(_core._compiled is None, reason="compiled extension not built")


def test_backend_is_reported():
    assert _core.BACKEND in ("cython", "python")


@cython
@given(st.integers(0, 2**31))
def test_stencil_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n, k, b = 40, 6, 3
    kin = rng.uniform(0, 5, n)
    nbr = rng.integers(-1, n, (k, n)).astype(np.int64)
    vals = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    psi = rng.standard_normal((n, b)) + 1j * rng.standard_normal((n, b))
    a = _core.stencil_apply(kin, nbr, vals, psi, backend="python")
    c = _core.stencil_apply(kin, nbr, vals, psi, backend="cython")
    np.testing.assert_allclose(c, a, rtol=1e-13, atol=1e-13)


@cython
@given(st.integers(0, 2**31), st.integers(1, 2))
def test_trig_sum_backends_agree(seed, d):
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(-20, 20, (15, d))
    amps = rng.standard_normal((15, 2)) + 1j * rng.standard_normal((15, 2))
    pts = rng.uniform(-10, 10, (30, d))
    a = _core.trig_sum(freqs, amps, pts, backend="python")
    c = _core.trig_sum(freqs, amps, pts, backend="cython")
    np.testing.assert_allclose(c, a, atol=1e-11)


def test_trig_sum_reference():
    freqs = np.array([[1.0], [-2.0]])
    amps = np.array([[1.0 + 0j], [0.5j]])
    pts = np.array([[0.3]])
    out = _kernels_py.trig_sum(freqs, amps, pts)
    expected = np.exp(0.3j) + 0.5j * np.exp(-0.6j)
    np.testing.assert_allclose(out[0, 0], expected)


@cython
def test_hamiltonian_apply_backends_agree(cell, potentials):
    H = BlochHamiltonian(PlanewaveBasis.box(cell, 6, 6), KPoint([0.1], [0.9]), 0.07, *potentials)
    psi = np.random.default_rng(1).standard_normal((H.size, 4)) + 0j
    np.testing.assert_allclose(apply(H, psi, backend="cython"), apply(H, psi, backend="python"),
                               rtol=1e-14, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _core.trig_sum(np.zeros((1, 1)), np.zeros((1, 1), complex), np.zeros((1, 1)), backend="fortran")
