"""Bravais lattices, their reciprocals, the bilayer product cell and k-point grids."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def _as_basis(basis) -> np.ndarray:
    a = np.atleast_2d(np.asarray(basis, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"lattice basis must be square, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class Lattice:
    """Bravais lattice ``{A n : n in Z^d}``; columns of ``basis`` are the lattice vectors."""

    basis: np.ndarray

    def __post_init__(self):
        a = _as_basis(self.basis)
        if a.shape[0] not in (1, 2):
            raise ValueError("only d = 1 or d = 2 lattices are supported")
        if not np.all(np.isfinite(a)) or abs(np.linalg.det(a)) <= 1e-14 * max(1.0, np.abs(a).max() ** a.shape[0]):
            raise ValueError("lattice basis is singular")
        a.setflags(write=False)
        object.__setattr__(self, "basis", a)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def cell_volume(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    def __eq__(self, other):
        return isinstance(other, Lattice) and np.array_equal(self.basis, other.basis)

    def __hash__(self):
        return hash(self.basis.tobytes())


@dataclass(frozen=True, eq=False)
class ReciprocalLattice:
    """Reciprocal lattice with basis ``B = 2 pi A^{-T}`` (columns are reciprocal vectors)."""

    basis: np.ndarray

    def __post_init__(self):
        b = _as_basis(self.basis)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def vectors(self, indices) -> np.ndarray:
        """Cartesian reciprocal vectors ``B m`` for integer index rows ``m``."""
        m = np.asarray(indices, dtype=float).reshape(-1, self.dim)
        return m @ self.basis.T


def reciprocal(lat: Lattice) -> ReciprocalLattice:
    return ReciprocalLattice(TWO_PI * np.linalg.inv(lat.basis).T)


@dataclass(frozen=True, eq=False)
class ProductCell:
    """The product lattice ``R1 x R2`` of a bilayer together with both reciprocals."""

    lat1: Lattice
    lat2: Lattice
    recip1: ReciprocalLattice = field(init=False)
    recip2: ReciprocalLattice = field(init=False)

    def __post_init__(self):
        if self.lat1.dim != self.lat2.dim:
            raise ValueError("both layers must have the same dimension")
        object.__setattr__(self, "recip1", reciprocal(self.lat1))
        object.__setattr__(self, "recip2", reciprocal(self.lat2))

    @property
    def dim(self) -> int:
        return self.lat1.dim

    def cartesian(self, kpoint: "KPoint") -> tuple[np.ndarray, np.ndarray]:
        """Cartesian ``(k, k')`` of a k-point given in fractional coordinates."""
        return self.recip1.basis @ kpoint.k, self.recip2.basis @ kpoint.kp


def _wrap_unit(frac: np.ndarray) -> np.ndarray:
    w = np.mod(frac, 1.0)
    # mod of a tiny negative number rounds to exactly 1.0
    w[w >= 1.0] = 0.0
    return w


@dataclass(frozen=True, eq=False)
class KPoint:
    """Fiber parameter ``(k, k')`` in fractional reciprocal coordinates, each in [0, 1)."""

    k: np.ndarray
    kp: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.k, dtype=float)).copy()
        kp = np.atleast_1d(np.asarray(self.kp, dtype=float)).copy()
        if k.shape != kp.shape or k.ndim != 1:
            raise ValueError("k and kp must be vectors of equal length")
        if np.any(k < 0) or np.any(k >= 1) or np.any(kp < 0) or np.any(kp >= 1):
            raise ValueError("fractional coordinates must lie in [0, 1); use KPoint.wrapped")
        k.setflags(write=False)
        kp.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "kp", kp)

    @classmethod
    def wrapped(cls, k, kp) -> "KPoint":
        """Build from arbitrary fractional coordinates, reducing them into [0, 1)."""
        return cls(_wrap_unit(np.atleast_1d(np.asarray(k, dtype=float))),
                   _wrap_unit(np.atleast_1d(np.asarray(kp, dtype=float))))

    @property
    def frac(self) -> np.ndarray:
        return np.concatenate([self.k, self.kp])

    def __eq__(self, other):
        return (isinstance(other, KPoint) and np.array_equal(self.k, other.k)
                and np.array_equal(self.kp, other.kp))

    def __hash__(self):
        return hash((self.k.tobytes(), self.kp.tobytes()))

    def __repr__(self):
        return f"KPoint(k={self.k.tolist()}, kp={self.kp.tolist()})"


@dataclass(frozen=True)
class Commensurate:
    """A shared nonzero reciprocal vector ``B1 m = B2 n`` was found."""

    m: tuple
    n: tuple
    qmax: int


@dataclass(frozen=True)
class NoWitnessUpTo:
    """No shared reciprocal vector with index norms up to ``qmax``.

    This is evidence of incommensurability, not a proof.
    """

    qmax: int


def incommensurability_check(lat1: Lattice, lat2: Lattice, qmax: int = 100,
                             tol: float = 1e-9):
    """Search for a nonzero reciprocal vector shared by both lattices.

    For every candidate ``m`` with ``|m|_inf <= qmax`` the matching ``n`` is
    obtained by rounding ``B2^{-1} B1 m``; this finds every witness within
    ``tol`` as long as ``tol`` is far below the reciprocal spacing.  The witness
    with the smallest ``|m|_inf + |n|_inf`` is returned (sign fixed so that the
    first nonzero entry of ``m`` is positive).
    """
    if qmax < 1:
        raise ValueError("qmax must be >= 1")
    if lat1.dim != lat2.dim:
        raise ValueError("lattices must have the same dimension")
    b1 = reciprocal(lat1).basis
    b2 = reciprocal(lat2).basis
    d = lat1.dim
    rng = np.arange(-qmax, qmax + 1)
    ms = np.array(list(itertools.product(rng, repeat=d)), dtype=np.int64)
    ms = ms[np.any(ms != 0, axis=1)]
    first_nonzero = ms[np.arange(len(ms)), np.argmax(ms != 0, axis=1)]
    ms = ms[first_nonzero > 0]

    g = ms @ b1.T
    ns = np.rint(np.linalg.solve(b2, g.T).T).astype(np.int64)
    resid = np.linalg.norm(g - ns @ b2.T, axis=1)
    ok = (resid <= tol) & np.all(np.abs(ns) <= qmax, axis=1) & np.any(ns != 0, axis=1)
    if not np.any(ok):
        return NoWitnessUpTo(qmax)
    ms, ns = ms[ok], ns[ok]
    size = np.abs(ms).max(axis=1) + np.abs(ns).max(axis=1)
    order = np.lexsort(tuple(ns.T[::-1]) + tuple(ms.T[::-1]) + (size,))
    best = order[0]
    return Commensurate(tuple(int(x) for x in ms[best]),
                        tuple(int(x) for x in ns[best]), qmax)


def kgrid(cell: ProductCell, n_per_axis: int, shift: float = 0.5) -> list[KPoint]:
    """Uniform grid over the product Brillouin zone.

    Fractional coordinates ``(i + shift) / n`` on each of the ``2 d`` axes, in
    lexicographic order with the first-layer axes varying slowest.  The default
    ``shift = 1/2`` gives the midpoint grid; ``shift = 0`` includes ``k~ = 0``.
    """
    if n_per_axis < 1:
        raise ValueError("n_per_axis must be >= 1")
    if not 0 <= shift < 1:
        raise ValueError("shift must lie in [0, 1)")
    d = cell.dim
    ticks = (np.arange(n_per_axis) + shift) / n_per_axis
    return [KPoint(np.array(p[:d]), np.array(p[d:]))
            for p in itertools.product(ticks, repeat=2 * d)]


def wrap_k(cell: ProductCell, k_cartesian, kp_cartesian=None) -> KPoint:
    """Reduce a Cartesian fiber parameter into the product Brillouin zone.

    ``k_cartesian`` may be the full ``2 d`` vector, or the first-layer part
    with ``kp_cartesian`` given separately.
    """
    d = cell.dim
    kt = np.atleast_1d(np.asarray(k_cartesian, dtype=float))
    if kp_cartesian is not None:
        kt = np.concatenate([kt, np.atleast_1d(np.asarray(kp_cartesian, dtype=float))])
    if kt.shape != (2 * d,):
        raise ValueError(f"expected a {2 * d}-vector")
    if not np.all(np.isfinite(kt)):
        raise ValueError("k must be finite")
    f1 = cell.lat1.basis.T @ kt[:d] / TWO_PI
    f2 = cell.lat2.basis.T @ kt[d:] / TWO_PI
    return KPoint.wrapped(f1, f2)
