import numpy as np
import pytest

from moire_spectra.geometry import Lattice
from moire_spectra.potential import FourierPotential
from moire_spectra.reference import (MemoryCapError, RealSpaceProblem, WindowError,
                                     covering_distance, hausdorff_window, realspace_spectrum)
from moire_spectra.sweep import SpectrumEstimate

LAT = Lattice([[1.0]])
ZERO = FourierPotential.zero(LAT)


def test_free_periodic_dispersion():
    p = RealSpaceProblem(ZERO, ZERO, 20.0, 0.05, "periodic")
    vals = realspace_spectrum(p, 3)
    h, L = 0.05, 20.0
    assert vals[0] == pytest.approx(0.0, abs=1e-10)
    expected = (2 / h ** 2) * np.sin(np.pi * h / L) ** 2
    np.testing.assert_allclose(vals[1:], expected, rtol=1e-8)
    assert expected == pytest.approx(0.5 * (2 * np.pi / L) ** 2, rel=1e-3)


def test_constant_shift():
    c = FourierPotential.constant(LAT, 0.7)
    a = realspace_spectrum(RealSpaceProblem(ZERO, ZERO, 10.0, 0.1), 5)
    b = realspace_spectrum(RealSpaceProblem(c, ZERO, 10.0, 0.1), 5)
    np.testing.assert_allclose(b, a + 0.7, atol=1e-10)


def test_monolayer_band_minimum():
    V = FourierPotential.cosine(LAT, 2.0, [1])
    ref = realspace_spectrum(RealSpaceProblem(V, ZERO, 60.0, 0.01, "periodic"), 1)[0]
    m = np.arange(-12, 13)
    M = np.diag(0.5 * (2 * np.pi * m) ** 2) + np.eye(25, k=1) + np.eye(25, k=-1)
    assert ref == pytest.approx(np.linalg.eigvalsh(M)[0], abs=1e-3)


def test_dirichlet_paths_agree():
    V = FourierPotential.cosine(LAT, 2.0, [1])
    p = RealSpaceProblem(V, FourierPotential.cosine(Lattice([[1.6]]), 1.0, [1]), 15.0, 0.05)
    tri = realspace_spectrum(p, 6)
    # sparse path: same operator through the periodic-free general branch
    from moire_spectra import reference
    n = p.cells - 1
    Vn = reference._potential_on_nodes(p)
    A = reference._laplacian_1d(n, p.h, False).toarray() + np.diag(Vn)
    np.testing.assert_allclose(tri, np.linalg.eigvalsh(A)[:6], atol=1e-10)


def test_two_dimensional_small():
    lat = Lattice(np.eye(2))
    z = FourierPotential.zero(lat)
    vals = realspace_spectrum(RealSpaceProblem(z, z, 4.0, 0.25), 3)
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[0] > 0


def test_memory_cap():
    lat = Lattice(np.eye(2))
    z = FourierPotential.zero(lat)
    with pytest.raises(MemoryCapError):
        realspace_spectrum(RealSpaceProblem(z, z, 100.0, 0.1), 2, max_points=1000)


def test_non_integer_cells():
    with pytest.raises(ValueError):
        RealSpaceProblem(ZERO, ZERO, 1.0, 0.3)


def test_dispersion_check():
    p = RealSpaceProblem(ZERO, ZERO, 10.0, 0.1)
    assert p.dispersion_error(3.0) == pytest.approx(np.pi ** 2 / 12 * 0.01 * 3.0)
    with pytest.raises(ValueError):
        p.check_resolution(100.0, 1e-3)


def test_hausdorff_identical():
    assert hausdorff_window([0.1, 0.5], [0.1, 0.5], (0, 1)) == 0.0


def test_hausdorff_point_vs_degenerate_interval():
    assert hausdorff_window([0.0], np.array([[1.0, 1.0]]), (-1, 2)) == pytest.approx(1.0)


def test_hausdorff_containment():
    spec = SpectrumEstimate([(0.0, 0.1), (1.9, 2.0)], 0.1, 4)
    assert hausdorff_window([0.0, 2.0], spec, (-1, 3)) == 0.0


def test_hausdorff_empty_window():
    with pytest.raises(WindowError):
        hausdorff_window([0.0], [5.0], (1, 2))


def test_covering_counts_interior():
    # one interval spanning a gap between two points: its midpoint is 1 away from both
    assert covering_distance([0.0, 2.0], np.array([[0.0, 2.0]]), (-1, 3)) == pytest.approx(1.0)
    assert hausdorff_window([0.0, 2.0], np.array([[0.0, 2.0]]), (-1, 3)) == 0.0


def test_truncation_stability_on_benchmark():
    from conftest import golden_cell, golden_potentials
    V1, V2 = golden_potentials(golden_cell())
    short = realspace_spectrum(RealSpaceProblem(V1, V2, 250.0, 0.01), 300)
    long = realspace_spectrum(RealSpaceProblem(V1, V2, 500.0, 0.01), 600)
    window = (long.min() - 0.5, long.min() + 3.0)
    assert hausdorff_window(short, long, window) < 5e-2
