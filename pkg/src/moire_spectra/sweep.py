"""Band structures over k-grids, spectrum unions and the delta ladder.

Every grid point (and every ladder rung) is an independent task.  Tasks are
seeded by their index, never by the worker that runs them, so results do not
depend on the worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eigensolve import EigensolverError, lowest_eigenpairs, make_seed
from .geometry import KPoint, ProductCell
from .operator import BasisSpec, BlochHamiltonian
from .potential import FourierPotential

log = logging.getLogger(__name__)

DEFAULT_LADDER = (0.2, 0.1, 0.05, 0.025, 0.0125)
FIT_POINTS = 3


class SweepError(RuntimeError):
    def __init__(self, message, failures=None, partial=None):
        super().__init__(message)
        self.failures = failures or {}
        self.partial = partial


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 500
    path: str = "auto"
    dense_cap: int = 4096
    dense_threshold: int = 1024
    seed: int = 0

    def solve(self, H, m, *seed_parts):
        return lowest_eigenpairs(H, m, tol=self.tol, path=self.path, max_iter=self.max_iter,
                                 seed=make_seed(self.seed, *seed_parts),
                                 dense_cap=self.dense_cap, dense_threshold=self.dense_threshold)


def parallel_map(fn, items, workers: int = 1) -> list:
    """``[fn(i, item) for i, item in enumerate(items)]`` with results placed by index."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(i, x) for i, x in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, i, x) for i, x in enumerate(items)]
        return [f.result() for f in futures]


@dataclass
class BandStructure:
    kpoints: list
    delta: float
    bands: np.ndarray  # (n_kpoints, m), rows ascending
    meta: dict = field(default_factory=dict)


@dataclass
class SpectrumEstimate:
    """Sorted disjoint closed intervals; ``delta`` is a float or ``"extrapolated"``."""

    intervals: list
    delta: object
    coverage: int

    def gaps(self) -> list:
        return [(a[1], b[0]) for a, b in zip(self.intervals, self.intervals[1:])]

    def as_array(self) -> np.ndarray:
        return np.array(self.intervals, dtype=float).reshape(-1, 2)


@dataclass
class ContinuationTable:
    kpoint: KPoint
    deltas: np.ndarray  # completed rungs, descending
    values: np.ndarray  # (n_rungs, m)
    extrapolated: np.ndarray  # (m,)
    slopes: np.ndarray
    fit_residuals: np.ndarray
    crossings: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)


def _fiber(cell, V1, V2, kpoint, delta, basis: BasisSpec) -> BlochHamiltonian:
    return BlochHamiltonian(basis.build(cell, kpoint, delta), kpoint, delta, V1, V2)


def band_structure(cell: ProductCell, V1: FourierPotential, V2: FourierPotential, delta: float,
                   kpoints, m: int, basis: BasisSpec = BasisSpec(),
                   opts: SolverOptions = SolverOptions(), workers: int = 1) -> BandStructure:
    """Lowest ``m`` fiber eigenvalues at every k-point, rows in k-point order."""
    kpoints = list(kpoints)

    def task(i, kp):
        H = _fiber(cell, V1, V2, kp, delta, basis)
        try:
            return opts.solve(H, m, i, 0).eigenvalues
        except EigensolverError as exc:
            raise SweepError(f"solver failed at k-point {i} {kp}: {exc}", {i: str(exc)}) from exc

    rows = parallel_map(task, kpoints, workers)
    meta = {"basis": basis, "solver": opts, "m": m}
    return BandStructure(kpoints, float(delta), np.array(rows).reshape(len(kpoints), m), meta)


def merge_intervals(intervals) -> list:
    out = []
    for lo, hi in sorted((float(a), float(b)) for a, b in intervals):
        if lo > hi:
            raise ValueError(f"interval [{lo}, {hi}] is inverted")
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(x) for x in out]


def union_of_bands(bands: np.ndarray, delta, coverage=None) -> SpectrumEstimate:
    bands = np.asarray(bands, dtype=float)
    ok = np.all(np.isfinite(bands), axis=1)
    b = bands[ok]
    if len(b) == 0:
        return SpectrumEstimate([], delta, 0)
    per_band = zip(b.min(axis=0), b.max(axis=0))
    return SpectrumEstimate(merge_intervals(per_band), delta,
                            int(ok.sum()) if coverage is None else coverage)


def spectrum_union(bs: BandStructure) -> SpectrumEstimate:
    """Per band ``[min_k, max_k]``, overlapping intervals merged."""
    return union_of_bands(bs.bands, bs.delta, len(bs.kpoints))


def _check_ladder(ladder) -> np.ndarray:
    lad = np.asarray(ladder, dtype=float)
    if lad.ndim != 1 or len(lad) < FIT_POINTS:
        raise ValueError(f"ladder needs at least {FIT_POINTS} rungs")
    if np.any(lad <= 0) or np.any(np.diff(lad) >= 0):
        raise ValueError("ladder must be strictly descending and positive")
    return lad


def fit_linear(deltas, values):
    """Least-squares ``value = lam0 + slope * delta`` per band on the given rungs."""
    A = np.column_stack([np.ones(len(deltas)), deltas])
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    resid = np.linalg.norm(values - A @ coef, axis=0)
    return coef[0], coef[1], resid


def _crossings(values: np.ndarray) -> list:
    """Adjacent band pairs whose gap shrinks then grows along the ladder (avoided crossing)."""
    flagged = []
    gaps = np.diff(values, axis=1)
    for j in range(gaps.shape[1]):
        g = gaps[:, j]
        for i in range(1, len(g) - 1):
            if g[i] < g[i - 1] and g[i] < g[i + 1]:
                flagged.append((j + 1, j + 2))
                break
    return flagged


def delta_continuation(cell: ProductCell, V1: FourierPotential, V2: FourierPotential,
                       kpoint: KPoint, ladder=DEFAULT_LADDER, m: int = 8,
                       basis: BasisSpec = BasisSpec(), opts: SolverOptions = SolverOptions(),
                       k_index: int = 0, workers: int = 1) -> ContinuationTable:
    """Bands along the delta ladder at one fiber, extrapolated linearly to delta = 0.

    The fit uses the ``FIT_POINTS`` smallest completed rungs.  Failed rungs are
    recorded in ``failures`` and left out of the table.
    """
    lad = _check_ladder(ladder)

    def task(i, delta):
        H = _fiber(cell, V1, V2, kpoint, delta, basis)
        try:
            return opts.solve(H, m, k_index, i).eigenvalues
        except EigensolverError as exc:
            return exc

    results = parallel_map(task, lad, workers)
    failures = {float(d): str(r) for d, r in zip(lad, results) if isinstance(r, Exception)}
    done = [i for i, r in enumerate(results) if not isinstance(r, Exception)]
    deltas = lad[done]
    values = np.array([results[i] for i in done]).reshape(len(done), m)
    if len(done) >= FIT_POINTS:
        lam0, slope, resid = fit_linear(deltas[-FIT_POINTS:], values[-FIT_POINTS:])
    else:
        lam0 = slope = resid = np.full(m, np.nan)
    crossings = _crossings(values) if len(done) >= 3 else []
    if crossings:
        log.debug("possible band crossings %s at %s", crossings, kpoint)
    return ContinuationTable(kpoint, deltas, values, lam0, slope, resid, crossings, failures)


def continuation_sweep(cell, V1, V2, kpoints, ladder=DEFAULT_LADDER, m: int = 8,
                       basis: BasisSpec = BasisSpec(), opts: SolverOptions = SolverOptions(),
                       workers: int = 1) -> list:
    """:func:`delta_continuation` at every k-point, tables in k-point order."""
    lad = _check_ladder(ladder)
    return parallel_map(
        lambda i, kp: delta_continuation(cell, V1, V2, kp, lad, m, basis, opts, k_index=i),
        list(kpoints), workers)


def spectrum_at_zero(cell, V1, V2, kpoints, ladder=DEFAULT_LADDER, m: int = 8,
                     basis: BasisSpec = BasisSpec(), opts: SolverOptions = SolverOptions(),
                     workers: int = 1, tables: list | None = None) -> SpectrumEstimate:
    """Union over the grid of the extrapolated bands.

    Pass precomputed ``tables`` (from :func:`continuation_sweep`) to skip the solves.
    """
    if tables is None:
        tables = continuation_sweep(cell, V1, V2, kpoints, ladder, m, basis, opts, workers)
    failures = {i: t.failures for i, t in enumerate(tables) if t.failures}
    if failures:
        raise SweepError(f"continuation failed at {len(failures)} k-point(s)", failures, tables)
    bands = np.array([t.extrapolated for t in tables])
    return union_of_bands(bands, "extrapolated", len(tables))
