import itertools

import numpy as np
import pytest
from hypothesis import settings

from moire_spectra import FourierPotential, Lattice, ProductCell

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

PHI = (1 + np.sqrt(5)) / 2


def golden_cell():
    return ProductCell(Lattice([[1.0]]), Lattice([[PHI]]))


def golden_potentials(cell):
    return (FourierPotential.cosine(cell.lat1, 2.0, [1]),
            FourierPotential.cosine(cell.lat2, 2.0, [1]))


@pytest.fixture
def cell():
    return golden_cell()


@pytest.fixture
def potentials(cell):
    return golden_potentials(cell)


@pytest.fixture
def square_cell():
    rot = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]])
    return ProductCell(Lattice(np.eye(2)), Lattice(1.1 * rot))


def random_potential(rng, lattice, radius, scale=1.0):
    """Random real potential with every index ``|m|_inf <= radius`` populated."""
    d = lattice.dim
    raw = {m: scale * complex(*rng.standard_normal(2))
           for m in itertools.product(range(-radius, radius + 1), repeat=d)}
    sym = {m: 0.5 * (c + np.conj(raw[tuple(-x for x in m)])) for m, c in raw.items()}
    return FourierPotential(lattice, sym)
