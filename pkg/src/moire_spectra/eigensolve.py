"""Lowest eigenpairs of a fiber Hamiltonian.

Two paths: a dense Hermitian eigendecomposition (LAPACK) and a matrix-free
locally optimal block preconditioned conjugate gradient iteration with hard
locking of converged pairs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operator import DEFAULT_DENSE_CAP, BlochHamiltonian, assemble_dense

SEED_ENV = "MOIRE_SPECTRA_SEED"
DEFAULT_SEED = 20240917


class EigensolverError(RuntimeError):
    """The iterative solver did not converge; carries the best estimates found."""

    def __init__(self, message, eigenvalues=None, residual_norms=None, iterations=0):
        super().__init__(message)
        self.eigenvalues = eigenvalues
        self.residual_norms = residual_norms
        self.iterations = iterations


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, shape (N, m)
    residual_norms: np.ndarray
    iterations: int
    path: str  # "dense" or "iterative"


def make_seed(*parts) -> np.random.SeedSequence:
    """Counter-style seed from integer parts; ``MOIRE_SPECTRA_SEED`` replaces the base."""
    base = int(os.environ.get(SEED_ENV, DEFAULT_SEED))
    return np.random.SeedSequence([base, *[int(p) & 0xFFFFFFFF for p in parts]])


class _Operator:
    """Uniform view over a BlochHamiltonian or an explicit Hermitian matrix."""

    def __init__(self, H):
        if isinstance(H, BlochHamiltonian):
            self.H = H
            self.n = H.size
            self.diag = np.asarray(H.kinetic, dtype=float)
            self._apply = H.apply
        else:
            M = np.asarray(H)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ValueError("matrix must be square")
            self.H = M
            self.n = M.shape[0]
            d = np.real(np.diag(M)).astype(float)
            self.diag = d - d.min()
            self._apply = lambda X: M @ X

    def apply(self, X):
        return self._apply(X)

    def dense(self, cap):
        if isinstance(self.H, BlochHamiltonian):
            return assemble_dense(self.H, cap)
        return self.H


def lowest_eigenpairs(H, m: int, tol: float = 1e-8, path: str = "auto",
                      max_iter: int = 500, seed=None, dense_cap: int = DEFAULT_DENSE_CAP,
                      dense_threshold: int = 1024, guard: int | None = None,
                      x0=None) -> EigenResult:
    """The ``m`` lowest eigenpairs of ``H`` (a BlochHamiltonian or a Hermitian matrix).

    Parameters
    ----------
    path : {"auto", "dense", "iterative"}
        ``auto`` uses the dense path when the basis has at most
        ``dense_threshold`` entries and the iterative path otherwise.
    tol : float
        Residual tolerance ``||H x - lambda x||`` for the iterative path.
    seed : int, sequence of int or SeedSequence, optional
        Seed for the random starting block; see :func:`make_seed`.
    guard : int, optional
        Extra block vectors; defaults to ``max(2, m // 4)``.

    Raises
    ------
    EigensolverError
        If the iterative path has not converged after ``max_iter`` block iterations.
    """
    op = _Operator(H)
    n = op.n
    if not 1 <= m <= n:
        raise ValueError(f"m = {m} must satisfy 1 <= m <= basis size {n}")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if path not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown path {path!r}")
    bs = m + (max(2, m // 4) if guard is None else guard)
    if path == "auto":
        path = "dense" if n <= dense_threshold else "iterative"
    if path == "iterative" and 3 * bs > n:
        # block methods need room for [X, W, P]
        if n > dense_cap:
            bs = max(m, n // 3)
        else:
            path = "dense"
    if path == "dense":
        return _dense(op, m, dense_cap)
    if seed is None:
        seed = make_seed()
    elif not isinstance(seed, np.random.SeedSequence):
        seed = make_seed(*np.atleast_1d(seed))
    rng = np.random.default_rng(seed)
    return _lobpcg(op, m, bs, tol, max_iter, rng, x0)


def _dense(op: _Operator, m: int, cap: int) -> EigenResult:
    M = op.dense(cap)
    _, vecs = sla.eigh(M, subset_by_index=[0, m - 1], driver="evr")
    # LAPACK eigenvalues carry an absolute error ~ eps ||M||; one Rayleigh-Ritz
    # step on the returned vectors brings the low ones down to ~ eps |lambda|
    AV = op.apply(vecs)
    vals, C = np.linalg.eigh(_herm(vecs.conj().T @ AV))
    vecs, AV = vecs @ C, AV @ C
    res = np.linalg.norm(AV - vecs * vals, axis=0)
    return EigenResult(vals, vecs, res, 1, "dense")


def _orth_against(Q, Y):
    if Y.shape[1] == 0:
        return Q
    for _ in range(2):
        Q = Q - Y @ (Y.conj().T @ Q)
    return Q


def _svqb(Q, drop=1e-10):
    """Orthonormalize columns via the Gram matrix, dropping near-dependent directions."""
    for _ in range(2):
        if Q.shape[1] == 0:
            return Q
        norms = np.linalg.norm(Q, axis=0)
        keep = norms > 1e-300
        Q = Q[:, keep] / norms[keep]
        G = Q.conj().T @ Q
        d, U = np.linalg.eigh(0.5 * (G + G.conj().T))
        keep = d > drop * d.max()
        Q = Q @ (U[:, keep] / np.sqrt(d[keep]))
    return Q


def _lobpcg(op: _Operator, m, bs, tol, max_iter, rng, x0) -> EigenResult:
    n = op.n
    X = rng.standard_normal((n, bs)) + 1j * rng.standard_normal((n, bs))
    if x0 is not None:
        x0 = np.asarray(x0, dtype=complex).reshape(n, -1)[:, :bs]
        X[:, :x0.shape[1]] = x0
    X = _svqb(X)
    AX = op.apply(X)
    theta, C = np.linalg.eigh(_herm(X.conj().T @ AX))
    X, AX = X @ C, AX @ C

    locked = np.zeros((n, 0), dtype=complex)
    P = AP = None
    rnorm = np.full(bs, np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        R = AX - X * theta
        rnorm = np.linalg.norm(R, axis=0)
        need = m - locked.shape[1]
        nconv = 0
        while nconv < min(need, X.shape[1]) and rnorm[nconv] <= tol:
            nconv += 1
        if nconv:
            locked = np.hstack([locked, X[:, :nconv]])
            X, AX, R, theta, rnorm = X[:, nconv:], AX[:, nconv:], R[:, nconv:], theta[nconv:], rnorm[nconv:]
            if P is not None:
                P, AP = P[:, nconv:], AP[:, nconv:]
        if locked.shape[1] >= m:
            break

        sigma = max(1.0, float(np.mean(theta[:max(1, need)])))
        W = R / (op.diag + sigma)[:, None]
        Y = np.hstack([locked, X])
        Q = W if P is None else np.hstack([W, P])
        Q = _svqb(_orth_against(Q, Y))
        if Q.shape[1] == 0:
            break
        AQ = op.apply(Q)
        S_AX = np.hstack([AX, AQ])
        S = np.hstack([X, Q])
        Hs = _herm(S.conj().T @ S_AX)
        vals, vecs = np.linalg.eigh(Hs)
        nact = X.shape[1]
        Cx = vecs[:, :nact]
        nx = X.shape[1]
        P = Q @ Cx[nx:]
        AP = AQ @ Cx[nx:]
        X = X @ Cx[:nx] + P
        AX = AX @ Cx[:nx] + AP
        theta = vals[:nact]
    else:
        it = max_iter

    if locked.shape[1] < m:
        best = np.concatenate([np.full(locked.shape[1], 0.0), rnorm])[:m]
        raise EigensolverError(
            f"iterative solver did not converge in {max_iter} iterations "
            f"({locked.shape[1]}/{m} pairs locked, worst active residual {rnorm.max():.3e})",
            eigenvalues=theta, residual_norms=best, iterations=it)

    # final Rayleigh-Ritz on the locked space restores ordering and orthogonality
    L = _svqb(locked[:, :m])
    AL = op.apply(L)
    vals, C = np.linalg.eigh(_herm(L.conj().T @ AL))
    vecs = L @ C
    res = np.linalg.norm(AL @ C - vecs * vals, axis=0)
    return EigenResult(vals, vecs, res, it, "iterative")


def _herm(A):
    return 0.5 * (A + A.conj().T)
