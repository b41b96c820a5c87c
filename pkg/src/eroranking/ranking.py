"""Unnormalized and normalized spectral ranking.

Both algorithms take the top eigenvector of ``iH`` (or ``i D^{-1} H``), fix its
global phase so the real part is orthogonal to the all-ones vector and the
imaginary part has a non-positive sum, then rank items by the real part
(scaled by the degrees for the normalized variant).

The returned score still carries an unavoidable global sign; ``align_sign``
resolves it against a known reference and is meant for simulations only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .eigen import DEFAULT_TOL, EigenPair, top_eigenpair_antisym, top_eigenpair_normalized

METHODS = ("unnormalized", "normalized")


@dataclass(frozen=True)
class SpectralEstimate:
    method: str
    eigen: EigenPair
    theta_hat: float
    score: np.ndarray
    permutation: np.ndarray
    sign_used: int = 1

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "theta_hat": self.theta_hat,
            "eigenvalue": self.eigen.value,
            "score": [float(v) for v in self.score],
            "permutation": [int(v) for v in self.permutation],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _three_branch_angle(a: float, b: float) -> float:
    if b < 0:
        return math.atan(a / b)
    if b == 0:
        return -math.pi / 2 * float(np.sign(a))
    return math.pi + math.atan(a / b)


def _reduce(theta: float) -> float:
    theta = math.remainder(theta, 2 * math.pi)
    return math.pi if theta <= -math.pi else theta


def rotation_angle(vector_re, vector_im) -> float:
    """Phase ``theta`` making ``Re(e^{i theta} v)`` sum to zero and ``Im`` sum to <= 0.

    Result lies in ``(-pi, pi]``. A vector whose real and imaginary parts both
    already sum to zero is returned unrotated.
    """
    a = float(np.sum(vector_re))
    b = float(np.sum(vector_im))
    if a == 0.0 and b == 0.0:
        return 0.0
    theta = _reduce(math.atan2(-a, -b))
    if __debug__:
        ref = _reduce(_three_branch_angle(a, b))
        gap = abs(math.remainder(theta - ref, 2 * math.pi))
        assert gap < 1e-9, (theta, ref)
    return theta


def rotate(vector_re, vector_im, theta: float):
    c, s = math.cos(theta), math.sin(theta)
    vr = np.asarray(vector_re, dtype=float)
    vi = np.asarray(vector_im, dtype=float)
    return c * vr - s * vi, s * vr + c * vi


def ranks(score) -> np.ndarray:
    """1-based rank of each item, ascending in score; ties go to the lower index."""
    score = np.asarray(score)
    order = np.argsort(score, kind="stable")
    out = np.empty(score.size, dtype=np.int64)
    out[order] = np.arange(1, score.size + 1)
    return out


def _estimate(method, eig: EigenPair, scale=None) -> SpectralEstimate:
    theta = rotation_angle(eig.vector_re, eig.vector_im)
    x, _ = rotate(eig.vector_re, eig.vector_im, theta)
    score = x if scale is None else scale * x
    return SpectralEstimate(method, eig, theta, score, ranks(score))


def rank_unnormalized(H, tol: float = DEFAULT_TOL, max_iter: int | None = None,
                      seed: int = 0) -> SpectralEstimate:
    eig = top_eigenpair_antisym(H, tol, max_iter, seed)
    return _estimate("unnormalized", eig)


def rank_normalized(H, tol: float = DEFAULT_TOL, max_iter: int | None = None,
                    seed: int = 0) -> SpectralEstimate:
    A = np.asarray(getattr(H, "entries", H), dtype=float)
    eig = top_eigenpair_normalized(A, tol, max_iter, seed)
    return _estimate("normalized", eig, scale=np.abs(A).sum(axis=1))


def rank(H, method: str = "unnormalized", **kw) -> SpectralEstimate:
    if method == "unnormalized":
        return rank_unnormalized(H, **kw)
    if method == "normalized":
        return rank_normalized(H, **kw)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def align_sign(estimate: SpectralEstimate, reference) -> SpectralEstimate:
    """Flip the estimate's global sign if that brings it strictly closer to ``reference``."""
    ref = np.asarray(reference, dtype=float)
    if ref.shape != estimate.score.shape:
        raise ValueError("reference length does not match the estimate")
    x = estimate.score / np.linalg.norm(estimate.score)
    y = ref / np.linalg.norm(ref)
    keep = np.abs(x - y).max()
    flip = np.abs(x + y).max()
    if flip < keep:
        n = estimate.permutation.size
        return replace(estimate, score=-estimate.score,
                       permutation=n + 1 - estimate.permutation,
                       sign_used=-estimate.sign_used)
    return estimate
