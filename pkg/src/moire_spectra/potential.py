"""Real periodic potentials stored as finite Fourier series on their own reciprocal lattice."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import Lattice, reciprocal


class CorruptedCoefficientsError(ValueError):
    """Coefficients violate Hermitian symmetry, so the potential is not real."""


class AliasingError(ValueError):
    """Requested Fourier radius is not resolved by the sample grid."""


HERMITIAN_TOL = 1e-12


def _key(m) -> tuple:
    return tuple(int(x) for x in np.atleast_1d(m))


@dataclass(frozen=True, eq=False)
class FourierPotential:
    """``V(r) = sum_m c(m) exp(i G_m . r)`` with ``G_m = 2 pi A^{-T} m``.

    ``coeffs`` maps integer index tuples to complex amplitudes.  Exact zeros
    are dropped; Hermitian symmetry ``c(-m) = conj(c(m))`` is enforced.
    """

    lattice: Lattice
    coeffs: dict

    def __post_init__(self):
        d = self.lattice.dim
        clean = {}
        for m, v in dict(self.coeffs).items():
            key = _key(m)
            if len(key) != d:
                raise ValueError(f"index {m} does not match lattice dimension {d}")
            v = complex(v)
            if not np.isfinite(v.real) or not np.isfinite(v.imag):
                raise CorruptedCoefficientsError(f"non-finite coefficient at {key}")
            if v != 0:
                clean[key] = clean.get(key, 0) + v
        scale = max([abs(v) for v in clean.values()], default=0.0)
        for m, v in clean.items():
            partner = clean.get(tuple(-x for x in m), 0.0)
            if abs(partner - v.conjugate()) > HERMITIAN_TOL * max(scale, 1.0):
                raise CorruptedCoefficientsError(
                    f"coefficients at {m} and its negation are not conjugate")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @classmethod
    def zero(cls, lattice: Lattice) -> "FourierPotential":
        return cls(lattice, {})

    @classmethod
    def constant(cls, lattice: Lattice, value: float) -> "FourierPotential":
        return cls(lattice, {(0,) * lattice.dim: value})

    @classmethod
    def cosine(cls, lattice: Lattice, amplitude: float, index, phase: float = 0.0):
        """``amplitude * cos(G_m . r + phase)``, i.e. ``c(+-m) = amplitude/2 * exp(+-i phase)``."""
        m = _key(index)
        half = 0.5 * amplitude * np.exp(1j * phase)
        if all(x == 0 for x in m):
            return cls(lattice, {m: amplitude * np.cos(phase)})
        return cls(lattice, {m: half, tuple(-x for x in m): np.conj(half)})

    @classmethod
    def from_list(cls, lattice: Lattice, rows) -> "FourierPotential":
        """Build from rows ``(m_1, ..., m_d, re, im)``."""
        d = lattice.dim
        coeffs = {}
        for row in rows:
            row = list(row)
            if len(row) != d + 2:
                raise ValueError(f"coefficient row {row} must have {d + 2} entries")
            key = _key(row[:d])
            coeffs[key] = coeffs.get(key, 0) + complex(float(row[d]), float(row[d + 1]))
        return cls(lattice, coeffs)

    def __add__(self, other: "FourierPotential") -> "FourierPotential":
        if other.lattice != self.lattice:
            raise ValueError("cannot add potentials on different lattices")
        out = dict(self.coeffs)
        for m, v in other.coeffs.items():
            out[m] = out.get(m, 0) + v
        return FourierPotential(self.lattice, out)

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def radius(self) -> int:
        return max((max(abs(x) for x in m) for m in self.coeffs), default=0)

    def indices(self) -> np.ndarray:
        return np.array(list(self.coeffs), dtype=np.int64).reshape(-1, self.dim)

    def values(self) -> np.ndarray:
        return np.array(list(self.coeffs.values()), dtype=complex)

    def __getitem__(self, m) -> complex:
        return self.coeffs.get(_key(m), 0j)

    def as_rows(self) -> list:
        return [list(m) + [v.real, v.imag] for m, v in self.coeffs.items()]


def evaluate(V: FourierPotential, r) -> np.ndarray | float:
    """Evaluate the potential at one point (``(d,)``) or many (``(N, d)``)."""
    pts = np.asarray(r, dtype=float)
    single = pts.ndim <= 1
    pts = pts.reshape(-1, V.dim)
    if not V.coeffs:
        out = np.zeros(len(pts))
        return float(out[0]) if single else out
    g = reciprocal(V.lattice).vectors(V.indices())
    z = np.exp(1j * (pts @ g.T)) @ V.values()
    scale = max(1.0, float(np.abs(V.values()).sum()))
    if np.max(np.abs(z.imag)) > 1e-9 * scale:
        raise CorruptedCoefficientsError("potential evaluates to a complex value")
    out = z.real
    return float(out[0]) if single else out


def sample_grid(lattice: Lattice, n: int) -> np.ndarray:
    """Points ``A (i / n)`` of the uniform ``n^d`` grid over the unit cell, row-major."""
    ticks = np.arange(n) / n
    alpha = np.array(list(itertools.product(ticks, repeat=lattice.dim)))
    return alpha @ lattice.basis.T


def from_samples(lattice: Lattice, samples, radius: int | None = None,
                 cutoff: float = 1e-13) -> FourierPotential:
    """Discrete Fourier analysis of real samples on the ``sample_grid``.

    ``samples`` is either a flat row-major array of ``n^d`` values or an
    array of shape ``(n,) * d``.  Coefficients with ``|m|_inf <= radius`` are
    kept; ``radius`` defaults to ``(n - 1) // 2``.
    """
    d = lattice.dim
    s = np.asarray(samples)
    if np.iscomplexobj(s):
        if np.max(np.abs(s.imag), initial=0.0) > 0:
            raise ValueError("samples must be real")
        s = s.real
    s = s.astype(float)
    if s.ndim == 1 and d > 1:
        n = int(round(len(s) ** (1.0 / d)))
        if n ** d != len(s):
            raise ValueError(f"{len(s)} samples do not form an n^{d} grid")
        s = s.reshape((n,) * d)
    n = s.shape[0]
    if s.shape != (n,) * d:
        raise ValueError(f"samples must form an n^{d} grid, got shape {s.shape}")
    if radius is None:
        radius = (n - 1) // 2
    if n < 2 * radius + 1:
        raise AliasingError(f"n = {n} samples cannot resolve radius {radius}; need n >= {2 * radius + 1}")

    c = np.fft.fftn(s) / s.size
    coeffs = {}
    thresh = cutoff * max(1.0, float(np.abs(c).max()))
    for m in itertools.product(range(-radius, radius + 1), repeat=d):
        pos = tuple(x % n for x in m)
        neg = tuple((-x) % n for x in m)
        v = 0.5 * (c[pos] + np.conj(c[neg]))
        if abs(v) > thresh:
            coeffs[m] = v
    return FourierPotential(lattice, coeffs)


def load_samples(path) -> np.ndarray:
    """Read a sample file: one real number per line, row-major grid order."""
    return np.loadtxt(path, dtype=float, ndmin=1)


@dataclass(frozen=True, eq=False)
class PairPotential:
    """Coefficient accessor for ``V1(r) + V2(r')`` on the product torus.

    Index ``(m, n)`` with ``m, n`` in ``Z^d``: nonzero only on the axes
    ``(m, 0)`` and ``(0, n)``; ``(0, 0)`` carries ``c1(0) + c2(0)``.
    """

    V1: FourierPotential
    V2: FourierPotential

    def __post_init__(self):
        if self.V1.dim != self.V2.dim:
            raise ValueError("potentials must share the dimension")

    @property
    def dim(self) -> int:
        return self.V1.dim

    def __call__(self, m, n) -> complex:
        m, n = _key(m), _key(n)
        zero = (0,) * self.dim
        out = 0j
        if n == zero:
            out += self.V1[m]
        if m == zero:
            out += self.V2[n]
        return out

    def stencil(self) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero combined coefficients as ``(offsets (K, 2d), values (K,))``."""
        d = self.dim
        zero = (0,) * d
        entries = {}
        for m, v in self.V1.coeffs.items():
            entries[m + zero] = entries.get(m + zero, 0) + v
        for n, v in self.V2.coeffs.items():
            entries[zero + n] = entries.get(zero + n, 0) + v
        entries = {k: v for k, v in sorted(entries.items()) if v != 0}
        offsets = np.array(list(entries), dtype=np.int64).reshape(-1, 2 * d)
        return offsets, np.array(list(entries.values()), dtype=complex)


def pair_indexing(V1: FourierPotential, V2: FourierPotential) -> PairPotential:
    return PairPotential(V1, V2)
