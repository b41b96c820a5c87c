"""Ground truth scores and sampling from the Erdos-Renyi outliers model.

An observation matrix ``H`` is anti-symmetric. For each pair ``i < j`` the
entry is the clean difference ``r_i - r_j`` with probability ``eta * p``, a
uniform outlier on ``[-M, M]`` with probability ``(1 - eta) * p``, and zero
otherwise. The lower triangle is the negated mirror of the upper one.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .errors import InvalidParameter

KINDS = ("uniform-grid", "sorted-gamma", "custom")

MAGIC = b"ERO1"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GroundTruth:
    scores: np.ndarray
    bound: float
    kind: str = "custom"

    def __post_init__(self):
        scores = _frozen(self.scores)
        if scores.ndim != 1 or scores.size < 2:
            raise InvalidParameter("scores must be a vector with at least 2 entries")
        if not self.bound > 0:
            raise InvalidParameter(f"bound must be positive, got {self.bound}")
        if np.abs(scores).max() > self.bound:
            raise InvalidParameter("every score must lie in [-bound, bound]")
        if self.kind not in KINDS:
            raise InvalidParameter(f"unknown ground-truth kind {self.kind!r}")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "bound", float(self.bound))

    @property
    def n(self) -> int:
        return self.scores.size


@dataclass(frozen=True)
class EroParams:
    n: int
    p: float
    eta: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParameter(f"n must be an integer >= 2, got {self.n}")
        if not 0 < self.p <= 1:
            raise InvalidParameter(f"p must lie in (0, 1], got {self.p}")
        if not 0 < self.eta <= 1:
            raise InvalidParameter(f"eta must lie in (0, 1], got {self.eta}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameter("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ComparisonMatrix:
    entries: np.ndarray
    degree: np.ndarray = field(default=None)

    def __post_init__(self):
        H = _frozen(self.entries)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise InvalidParameter("comparison matrix must be square")
        if not np.array_equal(H, -H.T):
            raise InvalidParameter("comparison matrix must be anti-symmetric")
        object.__setattr__(self, "entries", H)
        object.__setattr__(self, "degree", _frozen(np.abs(H).sum(axis=1)))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class NoiseDecomposition:
    """``entries = signal + noise`` with the masks that generated the sample."""

    signal: np.ndarray
    noise: np.ndarray
    mask_x: np.ndarray
    mask_y: np.ndarray
    outliers: np.ndarray


def make_ground_truth(kind: str, n: int, gamma_shape: float = 1.0, gamma_scale: float = 1.0,
                      seed: int = 0) -> GroundTruth:
    """Build ``uniform-grid`` (r_k = k, M = n) or ``sorted-gamma`` scores.

    Gamma scores are unbounded, so ``M`` is taken as the largest sampled score.
    """
    if int(n) != n or n < 2:
        raise InvalidParameter(f"n must be an integer >= 2, got {n}")
    if kind == "uniform-grid":
        return GroundTruth(np.arange(1, n + 1, dtype=float), float(n), kind)
    if kind == "sorted-gamma":
        if gamma_shape <= 0 or gamma_scale <= 0:
            raise InvalidParameter("gamma parameters must be positive")
        g = rngmod.stream(seed, rngmod.TRUTH)
        r = np.sort(g.gamma(gamma_shape, gamma_scale, size=n))
        return GroundTruth(r, float(r.max()), kind)
    if kind == "custom":
        raise InvalidParameter("use custom_ground_truth(scores) for custom scores")
    raise InvalidParameter(f"unknown ground-truth kind {kind!r}")


def custom_ground_truth(scores, bound: float | None = None) -> GroundTruth:
    scores = np.asarray(scores, dtype=float)
    if bound is None:
        bound = float(np.abs(scores).max())
    return GroundTruth(scores, bound, "custom")


def sample_comparisons(gt: GroundTruth, params: EroParams,
                       rng: np.random.Generator | None = None):
    """Draw one observation matrix and its signal/noise decomposition.

    Returns ``(ComparisonMatrix, NoiseDecomposition)``. When ``rng`` is not
    given, the sampling stream of ``params.seed`` is used.
    """
    if gt.n != params.n:
        raise InvalidParameter(f"ground truth has {gt.n} items but params.n = {params.n}")
    if rng is None:
        rng = rngmod.stream(params.seed, rngmod.SAMPLE)
    n, M = gt.n, gt.bound
    r = gt.scores
    iu = np.triu_indices(n, 1)
    m = iu[0].size
    x = rng.random(m) < params.p
    y = rng.random(m) < params.eta
    z = rng.uniform(-M, M, size=m)

    diff = r[:, None] - r[None, :]
    vals = np.where(x, np.where(y, diff[iu], z), 0.0)

    H = np.zeros((n, n))
    H[iu] = vals
    H.T[iu] = -vals

    def sym_mask(v):
        A = np.zeros((n, n), dtype=bool)
        A[iu] = v
        A.T[iu] = v
        return A

    Z = np.zeros((n, n))
    Z[iu] = z
    Z.T[iu] = -z

    signal = params.eta * params.p * diff
    dec = NoiseDecomposition(
        signal=_frozen(signal),
        noise=_frozen(H - signal),
        mask_x=sym_mask(x),
        mask_y=sym_mask(y),
        outliers=_frozen(Z),
    )
    for a in (dec.mask_x, dec.mask_y):
        a.setflags(write=False)
    return ComparisonMatrix(H), dec


def regenerate_entries(gt: GroundTruth, dec: NoiseDecomposition) -> np.ndarray:
    """Rebuild ``H = X o (Y o (r1' - 1r') + (J - Y) o Z)`` from the masks."""
    r = gt.scores
    diff = r[:, None] - r[None, :]
    return np.where(dec.mask_x, np.where(dec.mask_y, diff, dec.outliers), 0.0)


def expected_degree(gt: GroundTruth, params: EroParams) -> np.ndarray:
    r = gt.scores
    n = r.size
    # sum_j |r_i - r_j| via prefix sums over the sorted scores
    order = np.argsort(r, kind="stable")
    s = r[order]
    csum = np.concatenate(([0.0], np.cumsum(s)))
    k = np.arange(n)
    sorted_abs = (k * s - csum[:-1]) + ((csum[-1] - csum[1:]) - (n - 1 - k) * s)
    abs_sum = np.empty(n)
    abs_sum[order] = sorted_abs
    return (params.p * params.eta * abs_sum
            + params.p * (1 - params.eta) * (n - 1) * gt.bound / 2)


# -- serialization ---------------------------------------------------------

def write_matrix_binary(path, H) -> None:
    H = np.ascontiguousarray(np.asarray(getattr(H, "entries", H), dtype="<f8"))
    n = H.shape[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", n))
        fh.write(H.tobytes(order="C"))


def read_matrix_binary(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise InvalidParameter(f"{path}: not an ERO1 matrix file")
    (n,) = struct.unpack("<Q", data[4:12])
    body = data[12:]
    if len(body) != 8 * n * n:
        raise InvalidParameter(f"{path}: expected {n}x{n} entries, found {len(body) // 8} values")
    return np.frombuffer(body, dtype="<f8").reshape(n, n).astype(float)


def write_matrix_csv(path, H) -> None:
    H = np.asarray(getattr(H, "entries", H), dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in H:
            w.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=float)


def write_ground_truth_csv(path, gt: GroundTruth) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "score"])
        for i, s in enumerate(gt.scores):
            w.writerow([i, repr(float(s))])


def read_ground_truth_csv(path, bound: float | None = None) -> GroundTruth:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["index", "score"]:
            raise InvalidParameter(f"{path}: expected header 'index,score', got {','.join(header)!r}")
        rows = sorted((int(i), float(s)) for i, s in reader)
    if [i for i, _ in rows] != list(range(len(rows))):
        raise InvalidParameter(f"{path}: indices must run 0..n-1")
    return custom_ground_truth([s for _, s in rows], bound)
