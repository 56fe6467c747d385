"""Finite-difference oracle for ``-1/2 Laplacian + V1 + V2`` on a large truncated box."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .potential import FourierPotential, evaluate
from .sweep import SpectrumEstimate

DEFAULT_MAX_POINTS = 400_000


class WindowError(ValueError):
    pass


class MemoryCapError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class RealSpaceProblem:
    """Uniform grid of spacing ``h`` on ``[-L/2, L/2]^d``.

    Dirichlet boundaries keep the interior nodes only; periodic boundaries wrap
    (which artificially periodizes both potentials).
    """

    V1: FourierPotential
    V2: FourierPotential
    length: float
    h: float
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.V1.dim != self.V2.dim:
            raise ValueError("potentials must share the dimension")
        if self.boundary not in ("dirichlet", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.h <= 0 or self.length <= 0:
            raise ValueError("length and h must be positive")
        ratio = self.length / self.h
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError("length / h must be an integer")

    @property
    def dim(self) -> int:
        return self.V1.dim

    @property
    def cells(self) -> int:
        return int(round(self.length / self.h))

    def axis_nodes(self) -> np.ndarray:
        n = self.cells
        i = np.arange(1, n) if self.boundary == "dirichlet" else np.arange(n)
        return -0.5 * self.length + i * self.h

    def nodes(self) -> np.ndarray:
        x = self.axis_nodes()
        if self.dim == 1:
            return x[:, None]
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def dispersion_error(self, e_max: float) -> float:
        """Leading kinetic error ``(pi^2/12) h^2 E_max`` of the 3-point stencil at energy ``e_max``."""
        return math.pi ** 2 / 12.0 * self.h ** 2 * abs(e_max)

    def check_resolution(self, e_max: float, tol: float):
        err = self.dispersion_error(e_max)
        if err >= tol:
            raise ValueError(f"grid too coarse: dispersion error {err:.3g} >= tolerance {tol:.3g}")
        return err


def _potential_on_nodes(p: RealSpaceProblem) -> np.ndarray:
    pts = p.nodes()
    return evaluate(p.V1, pts) + evaluate(p.V2, pts)


def _laplacian_1d(n: int, h: float, periodic: bool) -> sp.csr_matrix:
    main = np.full(n, 1.0 / h ** 2)
    off = np.full(n - 1, -0.5 / h ** 2)
    T = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if periodic and n > 2:
        T[0, n - 1] = T[n - 1, 0] = -0.5 / h ** 2
    return T.tocsr()


def realspace_spectrum(p: RealSpaceProblem, m: int,
                       max_points: int = DEFAULT_MAX_POINTS) -> np.ndarray:
    """Lowest ``m`` eigenvalues, ascending."""
    V = _potential_on_nodes(p)
    n = len(V)
    if n > max_points:
        raise MemoryCapError(f"{n} grid points exceed the cap {max_points}")
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}]")
    if p.dim == 1 and p.boundary == "dirichlet":
        diag = V + 1.0 / p.h ** 2
        off = np.full(n - 1, -0.5 / p.h ** 2)
        return sla.eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                                    select_range=(0, m - 1))
    n_axis = len(p.axis_nodes())
    T = _laplacian_1d(n_axis, p.h, p.boundary == "periodic")
    if p.dim == 1:
        A = T + sp.diags(V)
    else:
        eye = sp.identity(n_axis, format="csr")
        A = sp.kron(T, eye) + sp.kron(eye, T) + sp.diags(V)
    A = A.tocsc()
    if n <= 2000:
        return np.linalg.eigvalsh(A.toarray())[:m]
    sigma = float(V.min()) - 1.0
    vals = spla.eigsh(A, k=m, sigma=sigma, which="LM", return_eigenvectors=False)
    return np.sort(vals)


def _as_intervals(spec) -> np.ndarray:
    if isinstance(spec, SpectrumEstimate):
        return spec.as_array()
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr
    arr = arr.ravel()
    return np.column_stack([arr, arr])


def _clip(iv: np.ndarray, lo: float, hi: float) -> np.ndarray:
    keep = (iv[:, 1] >= lo) & (iv[:, 0] <= hi)
    out = iv[keep].copy()
    out[:, 0] = np.maximum(out[:, 0], lo)
    out[:, 1] = np.minimum(out[:, 1], hi)
    return out


def _point_to_intervals(points: np.ndarray, iv: np.ndarray) -> np.ndarray:
    below = iv[None, :, 0] - points[:, None]
    above = points[:, None] - iv[None, :, 1]
    return np.maximum(np.maximum(below, above), 0.0).min(axis=1)


def hausdorff_window(specA, specB, window) -> float:
    """Hausdorff distance between two spectral sets restricted to ``window``.

    Each argument is a point list or an interval collection (``SpectrumEstimate``
    or ``(K, 2)`` array).  Points and intervals are the elements; the distance
    between two elements is the gap between them as subsets of the line (zero
    when a point lies in an interval).  Intervals are clipped to the window.
    """
    lo, hi = map(float, window)
    if lo > hi:
        raise WindowError("window is inverted")
    a = _clip(_as_intervals(specA), lo, hi)
    b = _clip(_as_intervals(specB), lo, hi)
    if len(a) == 0 or len(b) == 0:
        raise WindowError(f"a spectrum has no elements in the window [{lo}, {hi}]")
    gap = np.maximum(np.maximum(a[:, None, 0] - b[None, :, 1], b[None, :, 0] - a[:, None, 1]), 0.0)
    return float(max(gap.min(axis=1).max(), gap.min(axis=0).max()))


def covering_distance(points, intervals, window) -> float:
    """Set-level Hausdorff distance: also counts interval interiors far from every point.

    A stricter diagnostic than :func:`hausdorff_window`: an interval that spans a
    gap of the point set contributes half the gap width.
    """
    lo, hi = map(float, window)
    pts = np.sort(np.asarray(points, dtype=float).ravel())
    pts = pts[(pts >= lo) & (pts <= hi)]
    iv = _clip(_as_intervals(intervals), lo, hi)
    if len(pts) == 0 or len(iv) == 0:
        raise WindowError(f"a spectrum has no elements in the window [{lo}, {hi}]")
    forward = float(_point_to_intervals(pts, iv).max())
    back = 0.0
    for a, b in iv:
        cands = [a, b]
        inside = pts[(pts > a) & (pts < b)]
        edges = np.concatenate([[a], inside, [b]])
        cands.extend(0.5 * (edges[:-1] + edges[1:]))
        c = np.array(cands)
        back = max(back, float(np.abs(c[:, None] - pts[None, :]).min(axis=1).max()))
    return max(forward, back)
