"""Distances between estimated and true scores or rankings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotAPermutation, ZeroVector


@dataclass(frozen=True)
class DisplacementReport:
    per_item: np.ndarray
    max: float
    mean: float


def relative_linf_error(x, y) -> float:
    """Sign-invariant relative l-infinity distance of ``x`` (rescaled to ``||y||``) from ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ZeroVector("relative error is undefined for a zero vector")
    xs = x * (ny / nx)
    err = min(np.abs(xs - y).max(), np.abs(xs + y).max())
    return float(err / np.abs(y).max())


def _check_perm(pi, name):
    pi = np.asarray(pi)
    n = pi.size
    if pi.ndim != 1 or n < 2:
        raise NotAPermutation(f"{name} must be a vector of length >= 2")
    if not np.array_equal(np.sort(pi), np.arange(1, n + 1)):
        raise NotAPermutation(f"{name} is not a permutation of 1..{n}")
    return pi.astype(np.int64)


def displacement(pi1, pi2, chunk: int = 512) -> DisplacementReport:
    """Per-item fraction of pairs whose relative order differs between two rankings."""
    a = _check_perm(pi1, "pi1")
    b = _check_perm(pi2, "pi2")
    if a.size != b.size:
        raise NotAPermutation("permutations have different lengths")
    n = a.size
    counts = np.empty(n, dtype=np.int64)
    for start in range(0, n, chunk):
        sl = slice(start, start + chunk)
        da = np.sign(a[sl, None] - a[None, :])
        db = np.sign(b[sl, None] - b[None, :])
        counts[sl] = (da * db < 0).sum(axis=1)
    rho = counts / (n - 1)
    return DisplacementReport(rho, float(rho.max()), float(rho.mean()))


def kemeny_mismatch(score, H) -> int:
    """Sum over observed ordered pairs of ``|sign(s_i - s_j) - sign(H_ij)|``."""
    s = np.asarray(score, dtype=float)
    A = np.asarray(getattr(H, "entries", H), dtype=float)
    observed = A != 0
    diff = np.sign(s[:, None] - s[None, :])
    return int(np.abs(diff - np.sign(A))[observed].sum())
