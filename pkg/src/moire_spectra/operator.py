"""Planewave discretization of the regularized fiber operator on the product torus.

A basis entry ``(m, n)`` stands for ``exp(i (G1_m . r + G2_n . r'))``.  At fiber
``(k, k')`` and regularization ``delta`` the operator acts as

    kinetic(m, n) = 1/2 |a + b|^2 + delta/2 |a - b|^2,   a = k + G1_m,  b = k' + G2_n

on the diagonal, plus the convolutions with ``V1`` along the ``m`` indices and
with ``V2`` along the ``n`` indices.  Couplings that leave the basis are dropped
(Galerkin projection), so the discrete operator stays Hermitian.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .geometry import KPoint, ProductCell
from .potential import FourierPotential, PairPotential

DEFAULT_DENSE_CAP = 4096


class BasisTooLargeError(ValueError):
    pass


def _encode(idx: np.ndarray, bound: int) -> np.ndarray:
    """Monotone (lexicographic) integer code of index rows with entries in [-bound, bound]."""
    base = 2 * bound + 1
    code = np.zeros(len(idx), dtype=np.int64)
    for col in idx.T:
        code = code * base + (col + bound)
    return code


@dataclass(frozen=True, eq=False)
class PlanewaveBasis:
    """Ordered set of index pairs ``(m, n)``, stored as rows of ``entries`` (shape ``(N, 2d)``)."""

    cell: ProductCell
    mode: str
    entries: np.ndarray
    radius1: int | None = None
    radius2: int | None = None
    ecut: float | None = None
    _codes: np.ndarray = field(init=False, repr=False)
    _bound: int = field(init=False, repr=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64).reshape(-1, 2 * self.cell.dim)
        bound = int(np.abs(e).max(initial=0))
        codes = _encode(e, bound)
        order = np.argsort(codes, kind="stable")
        e, codes = e[order], codes[order]
        if np.any(np.diff(codes) == 0):
            raise ValueError("duplicate basis entries")
        neg = np.searchsorted(codes, _encode(-e, bound))
        if len(e) and (np.any(neg >= len(codes)) or np.any(codes[np.minimum(neg, len(codes) - 1)] != _encode(-e, bound))):
            raise ValueError("basis must be closed under (m, n) -> (-m, -n)")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "_codes", codes)
        object.__setattr__(self, "_bound", bound)

    @classmethod
    def box(cls, cell: ProductCell, radius1: int, radius2: int) -> "PlanewaveBasis":
        """Full tensor product of ``[-radius1, radius1]^d`` and ``[-radius2, radius2]^d``."""
        if radius1 < 0 or radius2 < 0:
            raise ValueError("radii must be >= 0")
        d = cell.dim
        axes = [range(-radius1, radius1 + 1)] * d + [range(-radius2, radius2 + 1)] * d
        entries = np.array(list(itertools.product(*axes)), dtype=np.int64)
        return cls(cell, "box", entries, radius1=radius1, radius2=radius2)

    @classmethod
    def energy_cut(cls, cell: ProductCell, ecut: float, kpoint: KPoint, delta: float):
        """Entries whose kinetic symbol at ``(kpoint, delta)`` is at most ``ecut``.

        An entry is kept when it or its negation passes the cut, which keeps
        the basis closed under negation away from ``k = 0``.
        """
        if ecut < 0:
            raise ValueError("ecut must be >= 0")
        _check_delta(delta)
        d = cell.dim
        k, kp = cell.cartesian(kpoint)
        # kinetic >= min(1, delta) (|a|^2 + |b|^2) bounds each layer index
        kmax = np.sqrt(ecut / min(1.0, delta)) + max(np.linalg.norm(k), np.linalg.norm(kp))
        r1 = int(np.ceil(kmax * np.linalg.norm(cell.lat1.basis, 2) / (2 * np.pi))) + 1
        r2 = int(np.ceil(kmax * np.linalg.norm(cell.lat2.basis, 2) / (2 * np.pi))) + 1
        trial = cls.box(cell, r1, r2)
        kin_p = kinetic_diag_cartesian(trial, k, kp, delta)
        kin_m = kinetic_diag_cartesian(trial, -k, -kp, delta)  # value at the negated entry
        keep = np.minimum(kin_p, kin_m) <= ecut
        return cls(cell, "ecut", trial.entries[keep], ecut=float(ecut))

    @property
    def dim(self) -> int:
        return self.cell.dim

    @property
    def size(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def m(self) -> np.ndarray:
        return self.entries[:, :self.dim]

    @property
    def n(self) -> np.ndarray:
        return self.entries[:, self.dim:]

    def index_of(self, targets) -> np.ndarray:
        """Positions of the given index rows, ``-1`` where a row is not in the basis."""
        t = np.asarray(targets, dtype=np.int64).reshape(-1, 2 * self.dim)
        out = np.full(len(t), -1, dtype=np.int64)
        inside = np.all(np.abs(t) <= self._bound, axis=1)
        if not np.any(inside):
            return out
        codes = _encode(t[inside], self._bound)
        pos = np.searchsorted(self._codes, codes)
        pos_c = np.minimum(pos, len(self._codes) - 1)
        hit = self._codes[pos_c] == codes
        sub = np.where(hit, pos_c, -1)
        out[inside] = sub
        return out

    def neighbors(self, offsets: np.ndarray) -> np.ndarray:
        """``nbr[c, i]`` = position of ``entries[i] - offsets[c]``, or ``-1``."""
        offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, 2 * self.dim)
        nbr = np.empty((len(offsets), self.size), dtype=np.int64)
        for c, o in enumerate(offsets):
            nbr[c] = self.index_of(self.entries - o)
        return nbr

    def reciprocal_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian ``G1_m`` and ``G2_n`` for every entry, each of shape ``(N, d)``."""
        return self.cell.recip1.vectors(self.m), self.cell.recip2.vectors(self.n)


@dataclass(frozen=True)
class BasisSpec:
    """Recipe for a basis; ``ecut`` bases depend on the fiber and on delta."""

    mode: str = "box"
    radius1: int = 8
    radius2: int = 8
    ecut: float | None = None

    def __post_init__(self):
        if self.mode not in ("box", "ecut"):
            raise ValueError(f"unknown basis mode {self.mode!r}")
        if self.mode == "ecut" and (self.ecut is None or self.ecut < 0):
            raise ValueError("ecut mode needs ecut >= 0")
        if self.mode == "box" and (self.radius1 < 0 or self.radius2 < 0):
            raise ValueError("radii must be >= 0")

    def build(self, cell: ProductCell, kpoint: KPoint, delta: float) -> PlanewaveBasis:
        if self.mode == "box":
            return PlanewaveBasis.box(cell, self.radius1, self.radius2)
        return PlanewaveBasis.energy_cut(cell, self.ecut, kpoint, delta)


def _check_delta(delta):
    if not (np.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be > 0 (got {delta}); delta -> 0 is reached by extrapolation only")


def kinetic_diag_cartesian(basis: PlanewaveBasis, k, kp, delta: float) -> np.ndarray:
    g1, g2 = basis.reciprocal_vectors()
    a = np.asarray(k, dtype=float) + g1
    b = np.asarray(kp, dtype=float) + g2
    return 0.5 * np.sum((a + b) ** 2, axis=1) + 0.5 * delta * np.sum((a - b) ** 2, axis=1)


def kinetic_diag(basis: PlanewaveBasis, kpoint: KPoint, delta: float) -> np.ndarray:
    _check_delta(delta)
    k, kp = basis.cell.cartesian(kpoint)
    return kinetic_diag_cartesian(basis, k, kp, delta)


@dataclass(frozen=True, eq=False)
class BlochHamiltonian:
    """Discretized fiber operator at ``kpoint`` with regularization ``delta > 0``."""

    basis: PlanewaveBasis
    kpoint: KPoint
    delta: float
    V1: FourierPotential
    V2: FourierPotential
    kinetic: np.ndarray = field(init=False, repr=False)
    _offsets: np.ndarray = field(init=False, repr=False)
    _values: np.ndarray = field(init=False, repr=False)
    _nbr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_delta(self.delta)
        cell = self.basis.cell
        if self.V1.lattice != cell.lat1 or self.V2.lattice != cell.lat2:
            raise ValueError("potential lattices do not match the product cell")
        if self.kpoint.k.shape != (cell.dim,):
            raise ValueError("k-point dimension does not match the cell")
        kin = kinetic_diag(self.basis, self.kpoint, self.delta)
        offsets, values = PairPotential(self.V1, self.V2).stencil()
        nbr = self.basis.neighbors(offsets)
        for arr in (kin, offsets, values, nbr):
            arr.setflags(write=False)
        object.__setattr__(self, "kinetic", kin)
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_nbr", nbr)

    @property
    def size(self) -> int:
        return self.basis.size

    @property
    def cell(self) -> ProductCell:
        return self.basis.cell

    def with_delta(self, delta: float) -> "BlochHamiltonian":
        return BlochHamiltonian(self.basis, self.kpoint, delta, self.V1, self.V2)

    def apply(self, psi) -> np.ndarray:
        return apply(self, psi)

    def assemble_dense(self, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        return assemble_dense(self, cap)


def apply(H: BlochHamiltonian, psi, backend=None) -> np.ndarray:
    """Matrix-free ``H psi`` for one vector ``(N,)`` or a block ``(N, B)``."""
    psi = np.asarray(psi)
    if psi.shape[0] != H.size or psi.ndim not in (1, 2):
        raise ValueError(f"vector length {psi.shape[0]} does not match basis size {H.size}")
    block = psi.reshape(H.size, -1)
    out = _core.stencil_apply(H.kinetic, H._nbr, H._values, block, backend=backend)
    return out.reshape(psi.shape)


def assemble_dense(H: BlochHamiltonian, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense Hermitian matrix of the discretized fiber operator."""
    n = H.size
    if n > cap:
        raise BasisTooLargeError(f"basis size {n} exceeds dense cap {cap}")
    M = np.diag(H.kinetic.astype(complex))
    rows = np.arange(n)
    for c in range(len(H._values)):
        j = H._nbr[c]
        ok = j >= 0
        M[rows[ok], j[ok]] += H._values[c]
    # (a + conj(b)) / 2 is bitwise symmetric, so the result is exactly Hermitian
    return 0.5 * (M + M.conj().T)


@dataclass(frozen=True)
class ShiftCertificate:
    """Index map relating the fibers at ``k`` and ``k + B s`` on a box basis.

    ``interior[i]`` is an entry position whose shifted index ``entry + s`` stays
    in the box, and ``image[i]`` is the position of that shifted entry.
    """

    shift: tuple
    interior: np.ndarray
    image: np.ndarray
    max_deviation: float

    def permutation(self) -> dict:
        return dict(zip(self.interior.tolist(), self.image.tolist()))


def fiber_shift_equivalence(H: BlochHamiltonian, shift, tol: float = 1e-9) -> ShiftCertificate:
    """Certify that shifting the fiber by a reciprocal vector relabels the basis.

    ``shift`` is the integer index ``(s1, s2)`` of the reciprocal vector
    ``(B1 s1, B2 s2)`` (a flat sequence of length ``2 d``).  The kinetic symbol at
    ``k + B s`` on entry ``e`` equals the symbol at ``k`` on entry ``e + s``.
    """
    if H.basis.mode != "box":
        raise ValueError("shift certificates need a box basis")
    d = H.cell.dim
    s = np.asarray(shift, dtype=np.int64).reshape(2 * d)
    image = H.basis.index_of(H.basis.entries + s)
    interior = np.flatnonzero(image >= 0)
    image = image[interior]
    k, kp = H.cell.cartesian(H.kpoint)
    tau1 = H.cell.recip1.basis @ s[:d]
    tau2 = H.cell.recip2.basis @ s[d:]
    shifted = kinetic_diag_cartesian(H.basis, k + tau1, kp + tau2, H.delta)
    dev = float(np.max(np.abs(shifted[interior] - H.kinetic[image]), initial=0.0))
    scale = max(1.0, float(np.max(H.kinetic, initial=0.0)))
    if dev > tol * scale:
        raise AssertionError(f"shifted kinetic symbols disagree by {dev}")
    return ShiftCertificate(tuple(int(x) for x in s), interior, image, dev)


def shifted_fiber_dense(H: BlochHamiltonian, shift, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense fiber matrix at the unwrapped parameter ``k + B s`` on the basis of ``H``.

    The potential couplings do not depend on the fiber, so only the diagonal changes.
    On a converged box its low spectrum matches that of ``H``.
    """
    d = H.cell.dim
    s = np.asarray(shift, dtype=np.int64).reshape(2 * d)
    k, kp = H.cell.cartesian(H.kpoint)
    tau1 = H.cell.recip1.basis @ s[:d]
    tau2 = H.cell.recip2.basis @ s[d:]
    M = assemble_dense(H, cap)
    idx = np.arange(H.size)
    M[idx, idx] = kinetic_diag_cartesian(H.basis, k + tau1, kp + tau2, H.delta) + M[idx, idx] - H.kinetic
    return M
