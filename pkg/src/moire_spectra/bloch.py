"""Bloch solutions of the regularized fibers and their restriction to the diagonal.

A fiber eigenvector ``v(m, n)`` at ``(k, k')`` restricted to ``r' = r`` gives the
quasi-periodic function

    u(r) = sum_{m,n} v(m, n) exp(i (k + k' + G1_m + G2_n) . r)

on ``R^d``.  For incommensurate layers these frequencies are pairwise distinct,
so mean-square norms (Besicovitch norms) are plain coefficient sums.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import _core
from .eigensolve import EigenResult
from .operator import BlochHamiltonian, PlanewaveBasis
from .potential import PairPotential

MERGE_TOL = 1e-9


class QuadratureResolutionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BlochSolution:
    """Eigenpair of a fiber Hamiltonian with unit-norm coefficients."""

    hamiltonian: BlochHamiltonian
    lam: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.shape != (self.hamiltonian.size,):
            raise ValueError("coefficient vector does not match the basis")
        nrm = np.linalg.norm(c)
        if nrm == 0:
            raise ValueError("zero coefficient vector")
        c = c / nrm
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def basis(self) -> PlanewaveBasis:
        return self.hamiltonian.basis

    @property
    def kpoint(self):
        return self.hamiltonian.kpoint

    @property
    def delta(self) -> float:
        return self.hamiltonian.delta

    def with_delta(self, delta: float) -> "BlochSolution":
        """Same coefficients and eigenvalue, transported to another regularization."""
        return BlochSolution(self.hamiltonian.with_delta(delta), self.lam, self.coeffs)

    def fiber_residual(self) -> float:
        """``||H v - lam v||`` of the discrete eigenproblem."""
        return float(np.linalg.norm(self.hamiltonian.apply(self.coeffs) - self.lam * self.coeffs))


def bloch_solution(H: BlochHamiltonian, result: EigenResult, band: int = 0) -> BlochSolution:
    """Wrap eigenpair ``band`` (0-based) of ``result`` as a BlochSolution."""
    return BlochSolution(H, result.eigenvalues[band], result.eigenvectors[:, band])


@dataclass(frozen=True, eq=False)
class QuasiPeriodicFunction:
    """Finite trigonometric sum ``sum_t amps[t] exp(i freqs[t] . r)``."""

    freqs: np.ndarray  # (K, d)
    amps: np.ndarray  # (K,)
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    def power(self) -> float:
        """Mean-square (Besicovitch) norm squared, valid for distinct frequencies."""
        return float(np.sum(np.abs(self.amps) ** 2))

    def __call__(self, r):
        return evaluate_qp(self, r)

    def __len__(self):
        return len(self.amps)


def merge_frequencies(freqs, amps, tol: float = MERGE_TOL):
    """Sum amplitude rows whose frequencies lie within ``tol``.

    ``amps`` has shape ``(K,)`` or ``(K, S)``.  Returns ``(freqs, amps, collided)``
    with frequencies sorted lexicographically.
    """
    freqs = np.asarray(freqs, dtype=float)
    amps = np.asarray(amps, dtype=complex)
    flat = amps.ndim == 1
    a2 = amps.reshape(len(amps), -1)
    n = len(freqs)
    pairs = cKDTree(freqs).query_pairs(tol, output_type="ndarray") if n > 1 else np.zeros((0, 2), int)
    collided = len(pairs) > 0
    if collided:
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        ncomp, labels = connected_components(graph, directed=False)
        f_out = np.zeros((ncomp, freqs.shape[1]))
        a_out = np.zeros((ncomp, a2.shape[1]), dtype=complex)
        counts = np.bincount(labels, minlength=ncomp)
        np.add.at(f_out, labels, freqs)
        np.add.at(a_out, labels, a2)
        f_out /= counts[:, None]
    else:
        f_out, a_out = freqs.copy(), a2.copy()
    order = np.lexsort(f_out.T[::-1])
    f_out, a_out = f_out[order], a_out[order]
    return f_out, (a_out[:, 0] if flat else a_out), collided


def _diagonal_frequencies(sol: BlochSolution) -> np.ndarray:
    k, kp = sol.basis.cell.cartesian(sol.kpoint)
    g1, g2 = sol.basis.reciprocal_vectors()
    return k + kp + g1 + g2


def _antidiagonal_weights(sol: BlochSolution) -> np.ndarray:
    """``|k - k' + G1 - G2|^2`` per basis entry (symbol of the regularizing term)."""
    k, kp = sol.basis.cell.cartesian(sol.kpoint)
    g1, g2 = sol.basis.reciprocal_vectors()
    return np.sum((k - kp + g1 - g2) ** 2, axis=1)


def reconstruct_diagonal(sol: BlochSolution, merge_tol: float = MERGE_TOL) -> QuasiPeriodicFunction:
    """Restriction ``u(r) = u~(r, r)`` of the Bloch solution as a frequency list."""
    f, a, collided = merge_frequencies(_diagonal_frequencies(sol), sol.coeffs, merge_tol)
    prov = {"k": sol.kpoint.k.tolist(), "kp": sol.kpoint.kp.tolist(),
            "delta": sol.delta, "lambda": sol.lam, "merged": collided}
    return QuasiPeriodicFunction(f, a, prov)


def evaluate_qp(f: QuasiPeriodicFunction, r):
    pts = np.asarray(r, dtype=float)
    single = pts.ndim <= 1
    pts = pts.reshape(-1, f.dim)
    vals = _core.trig_sum(f.freqs, f.amps[:, None], pts)[:, 0]
    return complex(vals[0]) if single else vals


@dataclass
class ResidualReport:
    relative_ms_residual: float
    lam: float
    delta: float
    bound: float
    exact: bool = True
    ball_residuals: list = field(default_factory=list)
    truncation_residual: float = 0.0


def residual_function(sol: BlochSolution, merge_tol: float = MERGE_TOL):
    """``(u, (H - lam) u)`` on the diagonal as two QuasiPeriodicFunctions on shared frequencies.

    The residual comes from the regularizing term alone:
    ``-(delta/2) |k - k' + G1 - G2|^2 v(m, n)`` at frequency ``k + k' + G1 + G2``.
    """
    res = -0.5 * sol.delta * _antidiagonal_weights(sol) * sol.coeffs
    f, a, collided = merge_frequencies(_diagonal_frequencies(sol),
                                       np.column_stack([sol.coeffs, res]), merge_tol)
    prov = {"k": sol.kpoint.k.tolist(), "kp": sol.kpoint.kp.tolist(),
            "delta": sol.delta, "lambda": sol.lam, "merged": collided}
    return (QuasiPeriodicFunction(f, a[:, 0], prov),
            QuasiPeriodicFunction(f, a[:, 1], dict(prov, residual=True)), collided)


def truncation_residual(sol: BlochSolution) -> float:
    """Relative mean-square size of the potential couplings dropped at the basis edge."""
    H = sol.hamiltonian
    offsets, values = PairPotential(H.V1, H.V2).stencil()
    leak = {}
    basis = sol.basis
    for o, v in zip(offsets, values):
        targets = basis.entries + o
        outside = basis.index_of(targets) < 0
        for t, c in zip(map(tuple, targets[outside]), sol.coeffs[outside]):
            leak[t] = leak.get(t, 0) + v * c
    if not leak:
        return 0.0
    return float(np.sqrt(sum(abs(x) ** 2 for x in leak.values())))


def exact_residual(sol: BlochSolution, merge_tol: float = MERGE_TOL) -> ResidualReport:
    """Mean-square residual of the diagonal restriction, computed in frequency space."""
    u, res, collided = residual_function(sol, merge_tol)
    rel = math.sqrt(res.power() / u.power())
    w = _antidiagonal_weights(sol)
    support = sol.coeffs != 0
    bound = 0.5 * sol.delta * float(w[support].max(initial=0.0))
    return ResidualReport(rel, sol.lam, sol.delta, bound, exact=not collided,
                          truncation_residual=truncation_residual(sol) / math.sqrt(u.power()))


def nyquist_points_per_unit(*functions) -> float:
    """Sampling density below which the midpoint sum aliases some ``|f|^2`` frequency to zero."""
    omega = max(float(np.max(np.linalg.norm(f.freqs, axis=1), initial=0.0)) for f in functions)
    return omega / math.pi


def _ball_nodes(d: int, R: float, q: float):
    n = int(math.ceil(2 * R * q))
    h = 2 * R / n
    ticks = -R + (np.arange(n) + 0.5) * h
    if d == 1:
        return ticks[:, None], h
    # 2d: midpoint cells of the bounding square whose centers lie in the disk
    xx, yy = np.meshgrid(ticks, ticks, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    pts = pts[np.einsum("ij,ij->i", pts, pts) <= R * R]
    return pts, h * h


def _resolve_q(q, *functions):
    nyq = nyquist_points_per_unit(*functions)
    if q is None:
        return max(4.0, 2.0 * nyq)
    if q <= nyq:
        raise QuadratureResolutionError(
            f"{q} points per unit is below the Nyquist density {nyq:.3g}; increase quad_points_per_unit")
    return float(q)


def ball_residual(sol: BlochSolution, R: float, quad_points_per_unit: float | None = None,
                  merge_tol: float = MERGE_TOL) -> float:
    """``sqrt(int_B |(H - lam) u|^2 / int_B |u|^2)`` over the ball of radius ``R`` (midpoint rule)."""
    if R <= 0:
        raise ValueError("R must be > 0")
    u, res, _ = residual_function(sol, merge_tol)
    q = _resolve_q(quad_points_per_unit, u)
    pts, _ = _ball_nodes(u.dim, R, q)
    vals = _core.trig_sum(u.freqs, np.column_stack([u.amps, res.amps]), pts)
    p = np.sum(np.abs(vals) ** 2, axis=0)
    return float(math.sqrt(p[1] / p[0]))


def _derivative_columns(f: QuasiPeriodicFunction, order: int) -> np.ndarray:
    """Amplitudes of every partial derivative of total order ``order``, as columns."""
    cols = []
    for alpha in itertools.combinations_with_replacement(range(f.dim), order):
        factor = np.ones(len(f.amps), dtype=complex)
        for axis in alpha:
            factor = factor * (1j * f.freqs[:, axis])
        cols.append(f.amps * factor)
    return np.column_stack(cols) if cols else np.zeros((len(f.amps), 0), dtype=complex)


def _sobolev_gram(x: QuasiPeriodicFunction, y: QuasiPeriodicFunction, K: float, order: float, q):
    """Surrogate ``H^order(B_K)`` products ``(<x,x>, <y,y>, <x,y>)``.

    Integer orders use ``sum_{|alpha| <= j} int_B d^alpha f conj(d^alpha g)``;
    fractional orders interpolate linearly between the neighbouring integers.
    """
    lo = math.floor(order)
    hi = math.ceil(order)
    theta = order - lo
    freqs = np.vstack([x.freqs, y.freqs])
    nx = len(x.amps)
    pts, w = _ball_nodes(x.dim, K, _resolve_q(q, x, y))
    grams = {}
    for j in range(0, hi + 1):
        ax = _derivative_columns(x, j)
        ay = _derivative_columns(y, j)
        ncol = ax.shape[1]
        amps = np.zeros((len(freqs), 2 * ncol), dtype=complex)
        amps[:nx, :ncol] = ax
        amps[nx:, ncol:] = ay
        vals = _core.trig_sum(freqs, amps, pts)
        vx, vy = vals[:, :ncol], vals[:, ncol:]
        grams[j] = np.array([np.sum(np.abs(vx) ** 2), np.sum(np.abs(vy) ** 2),
                             np.sum(vx * vy.conj())]) * w
    total_lo = sum(grams[j] for j in range(lo + 1))
    total_hi = sum(grams[j] for j in range(hi + 1))
    g = (1 - theta) * total_lo + theta * total_hi
    return g[0].real, g[1].real, g[2]


def solution_set_distance(setA, setB, K: float, s: float,
                          quad_points_per_unit: float | None = None) -> float:
    """``sup_{x in A} inf_{y in B}`` of a Sobolev ``H^{s - d/2}(B_K)`` surrogate distance.

    Solutions are defined up to a global phase, so each pair distance is
    minimized over ``y -> exp(i theta) y``.  Returns ``inf`` for an empty ``setB``.
    """
    setA, setB = list(setA), list(setB)
    if not 1 <= s < 2:
        raise ValueError("s must satisfy 1 <= s < 2")
    if not setA:
        raise ValueError("setA is empty")
    if not setB:
        return math.inf
    order = s - setA[0].dim / 2.0
    worst = 0.0
    for x in setA:
        best = math.inf
        for y in setB:
            xx, yy, xy = _sobolev_gram(x, y, K, order, quad_points_per_unit)
            d2 = max(xx + yy - 2 * abs(xy), 0.0)
            best = min(best, math.sqrt(d2))
        worst = max(worst, best)
    return worst
