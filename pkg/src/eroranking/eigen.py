"""Top eigenpairs of ``iH`` and ``i D^{-1} H`` for real anti-symmetric ``H``.

For anti-symmetric ``H`` the top singular triplet ``(sigma, u, v)`` gives the
top eigenpair of the Hermitian matrix ``iH`` directly: ``iH (v + iu) =
sigma (v + iu)``. Singular values of ``H`` come in equal pairs, and every
right singular vector in the top pair yields the same complex eigenvector
up to a global phase, so the iteration only has to separate ``sigma_1``
from ``sigma_3``.

The solver is subspace (block power) iteration on ``H^T H`` with a
Rayleigh-Ritz step, stopped on the eigen-residual. Everything stays real;
complex vectors only appear in the returned pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import IsolatedNode, NoConvergence, TooLarge, ZeroMatrix

DEFAULT_TOL = 1e-10
GAP_RTOL = 1e-8
ORACLE_MAX_N = 64


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector_re: np.ndarray
    vector_im: np.ndarray
    residual: float
    iterations: int
    history: tuple = field(default=(), repr=False, compare=False)

    @property
    def vector(self) -> np.ndarray:
        return self.vector_re + 1j * self.vector_im


def _entries(H):
    return np.asarray(getattr(H, "entries", H), dtype=float)


def default_max_iter(n: int) -> int:
    return 10 * n + 1000


def _antisym_residual(H, v, u, sigma):
    # iH(v + iu) - sigma(v + iu) = (-Hu - sigma v) + i(Hv - sigma u), scaled by 1/sqrt(2)
    re = -(H @ u) - sigma * v
    im = H @ v - sigma * u
    return math.sqrt(float(re @ re + im @ im) / 2.0)


def top_singular_triplet(H, tol: float = DEFAULT_TOL, max_iter: int | None = None,
                         seed: int = 0, block: int = 8):
    """Top singular triplet of an anti-symmetric matrix by block power iteration.

    Returns ``(sigma, u, v, residual, iterations, ritz, history)`` where
    ``ritz`` are the final Ritz singular values of the block. Convergence is
    declared once ``residual <= tol * sigma``.
    """
    H = _entries(H)
    n = H.shape[0]
    if max_iter is None:
        max_iter = default_max_iter(n)
    scale = float(np.abs(H).max()) if H.size else 0.0
    if scale == 0.0:
        raise ZeroMatrix("matrix is identically zero; the top eigenvector is undefined")

    b = min(n, block)
    draw = 0
    g = rngmod.stream(seed, rngmod.SOLVER, draw)
    Q, _ = np.linalg.qr(g.standard_normal((n, b)))
    history = []
    sigma = 0.0
    residual = math.inf
    ritz = np.zeros(b)
    u = v = None
    for it in range(1, max_iter + 1):
        B = H @ Q
        Ub, ritz, Vt = np.linalg.svd(B, full_matrices=False)
        sigma = float(ritz[0])
        if sigma <= 1e-14 * scale:
            # start block orthogonal to the row space; redraw
            draw += 1
            g = rngmod.stream(seed, rngmod.SOLVER, draw)
            Q, _ = np.linalg.qr(g.standard_normal((n, b)))
            continue
        v = Q @ Vt[0]
        v /= np.linalg.norm(v)
        u = H @ v
        sigma = float(np.linalg.norm(u))
        u /= sigma
        residual = _antisym_residual(H, v, u, sigma)
        history.append(residual)
        if residual <= tol * sigma:
            return sigma, u, v, residual, it, ritz, tuple(history)
        # H^T B = -H B; keeps the block inside the dominant invariant subspace of H^T H
        Q, _ = np.linalg.qr(-(H @ B))
    raise NoConvergence(max_iter, residual)


def _check_gap(ritz, sigma, max_iter, residual):
    # ritz[1] pairs with ritz[0]; the next distinct value is ritz[2]
    if ritz.size >= 3 and sigma > 0:
        if (sigma - ritz[2]) / sigma < GAP_RTOL:
            raise NoConvergence(max_iter, residual, reason="no spectral gap below the top eigenvalue")


def top_eigenpair_antisym(H, tol: float = DEFAULT_TOL, max_iter: int | None = None,
                          seed: int = 0) -> EigenPair:
    """Top eigenpair of ``iH``. ``H`` is a ``ComparisonMatrix`` or a square array."""
    A = _entries(H)
    if max_iter is None:
        max_iter = default_max_iter(A.shape[0])
    sigma, u, v, res, its, ritz, hist = top_singular_triplet(A, tol, max_iter, seed)
    _check_gap(ritz, sigma, max_iter, res)
    return EigenPair(sigma, v / math.sqrt(2), u / math.sqrt(2), res, its, hist)


def top_eigenpair_normalized(H, tol: float = DEFAULT_TOL, max_iter: int | None = None,
                             seed: int = 0) -> EigenPair:
    """Top eigenpair of ``i D^{-1} H`` through ``D^{-1/2} H D^{-1/2}``.

    The residual is measured against ``i D^{-1} H`` itself. It may exceed the
    symmetric solve's residual by at most ``sqrt(max D / min D)``, which is
    the acceptance threshold used here.
    """
    A = _entries(H)
    d = np.abs(A).sum(axis=1)
    zero = np.flatnonzero(d == 0)
    if zero.size:
        raise IsolatedNode(int(zero[0]))
    s = 1.0 / np.sqrt(d)
    Hs = s[:, None] * A * s[None, :]
    sym = top_eigenpair_antisym(Hs, tol, max_iter, seed)
    psi = s * sym.vector
    psi /= np.linalg.norm(psi)
    xi = sym.value
    res = float(np.linalg.norm(1j * ((A @ psi) / d) - xi * psi))
    kappa_sqrt = math.sqrt(d.max() / d.min())
    if res > max(tol, 1e-15) * xi * kappa_sqrt * 4:
        raise NoConvergence(sym.iterations, res, reason="normalized residual above tolerance")
    return EigenPair(xi, psi.real.copy(), psi.imag.copy(), res, sym.iterations, sym.history)


def dense_oracle_spectrum(H) -> np.ndarray:
    """All eigenvalues of ``iH`` by a dense Hermitian eigensolver, descending."""
    A = _entries(H)
    if A.shape[0] > ORACLE_MAX_N:
        raise TooLarge(f"dense oracle limited to n <= {ORACLE_MAX_N}, got {A.shape[0]}")
    return np.linalg.eigvalsh(1j * A)[::-1]


def dense_oracle_eigenpair(H):
    """Top eigenvalue and unit eigenvector of ``iH`` from the dense solver."""
    A = _entries(H)
    if A.shape[0] > ORACLE_MAX_N:
        raise TooLarge(f"dense oracle limited to n <= {ORACLE_MAX_N}, got {A.shape[0]}")
    w, V = np.linalg.eigh(1j * A)
    return float(w[-1]), V[:, -1]


def operator_norm(A) -> float:
    """Spectral norm ``||A||`` by a dense SVD."""
    return float(np.linalg.norm(np.asarray(A, dtype=float), 2))
