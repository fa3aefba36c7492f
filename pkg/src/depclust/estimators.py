"""Rank statistics, nearest neighbours with random tie-breaking, and ``T_n``.

The single-response statistic is

    T_n(Y | Z) = sum_k (n * min(R_k, R_N(k)) - L_k**2) / sum_k L_k * (n - L_k)

with ``R_k = #{j : Y_j <= Y_k}``, ``L_k = #{j : Y_j >= Y_k}`` and ``N(k)`` a
Euclidean nearest neighbour of ``Z_k`` among the other observations.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._seeding import tie_choice
from .errors import DegenerateError, InputError

# relative slack used only to *gather* candidate ties from the kd-tree;
# the final decision is made on exactly recomputed squared distances
_GATHER_RTOL = 1e-9


def worker_count() -> int:
    """Worker cap from ``DEPCLUST_THREADS`` (default 1)."""
    raw = os.environ.get("DEPCLUST_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SampleMatrix:
    """``n`` observations of ``m`` labelled, non-degenerate variables."""

    values: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise InputError(f"expected a 2-D grid, got shape {values.shape}")
        n, m = values.shape
        if n < 2:
            raise InputError(f"need at least 2 observations, got {n}")
        labels = tuple(str(x) for x in self.labels) if self.labels else tuple(
            f"X{j + 1}" for j in range(m)
        )
        if len(labels) != m:
            raise InputError(f"{len(labels)} labels for {m} columns")
        if len(set(labels)) != m:
            raise InputError("variable labels must be unique")
        bad = ~np.isfinite(values)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise InputError(f"non-finite value at row {row + 1}, column {labels[col]!r}")
        for j in range(m):
            if np.all(values[:, j] == values[0, j]):
                raise DegenerateError(f"column {labels[j]!r} is constant")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown variable {label!r}") from None

    def select(self, columns: Sequence[int]) -> "SampleMatrix":
        cols = list(columns)
        return SampleMatrix(self.values[:, cols], tuple(self.labels[j] for j in cols))


@dataclass(frozen=True)
class RankData:
    r: np.ndarray
    l: np.ndarray


@dataclass(frozen=True)
class NeighborIndex:
    n_of: np.ndarray
    seed: int


def _as_vector(column) -> np.ndarray:
    y = np.asarray(column, dtype=float)
    if y.ndim != 1:
        y = y.reshape(-1)
    if not np.all(np.isfinite(y)):
        raise InputError("response contains non-finite values")
    return y


def _as_points(points) -> np.ndarray:
    z = np.asarray(points, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2:
        raise InputError(f"conditioners must be an n x d grid, got shape {z.shape}")
    if z.shape[1] < 1:
        raise InputError("conditioners need at least one coordinate")
    if not np.all(np.isfinite(z)):
        raise InputError("conditioners contain non-finite values")
    return z


def compute_ranks(column) -> RankData:
    """Weak-inequality ranks ``R`` and reverse counts ``L`` (no midranks)."""
    y = _as_vector(column)
    if y.size < 2:
        raise InputError("need at least 2 observations")
    s = np.sort(y)
    n = y.size
    r = np.searchsorted(s, y, side="right").astype(np.int64)
    l = (n - np.searchsorted(s, y, side="left")).astype(np.int64)
    return RankData(r=r, l=l)


def _sq_dist(z: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Squared distances ``|z[rows] - z[cols]|**2`` accumulated coordinate by coordinate.

    Elementwise accumulation keeps the result bit-identical regardless of the
    broadcast shape, which is what lets the kd-tree path and the brute-force
    oracle agree exactly.
    """
    diff = z[cols, 0] - z[rows, 0]
    acc = diff * diff
    for c in range(1, z.shape[1]):
        diff = z[cols, c] - z[rows, c]
        acc = acc + diff * diff
    return acc


def _pick(seed: int, k: int, ties: np.ndarray) -> int:
    if ties.size == 1:
        return int(ties[0])
    ties = np.sort(ties)
    return int(ties[tie_choice(seed, k, ties.size)])


def _resolve_exact(z: np.ndarray, k: int, candidates: np.ndarray, seed: int) -> int:
    cand = candidates[candidates != k]
    sq = _sq_dist(z, np.full(cand.size, k), cand)
    return _pick(seed, k, cand[sq == sq.min()])


def _dense_neighbors(z: np.ndarray, seed: int) -> np.ndarray:
    """Gram-matrix screening followed by exact resolution of the candidates.

    The Gram expansion is only trusted up to a rounding bound; every point
    within that bound of the approximate minimum is re-checked exactly.
    """
    n, d = z.shape
    centred = z - z.mean(axis=0)  # centring shrinks the rounding bound
    # screening runs in single precision; the bound covers the cast as well
    zc = centred.astype(np.float32)
    norms64 = np.einsum("ij,ij->i", centred, centred)
    norms = np.einsum("ij,ij->i", zc, zc)
    slack = 16.0 * (d + 2) * float(np.finfo(np.float32).eps) * (norms64 + norms64.max()) + 1e-30
    # one product yields |b|^2 - 2<a, b>, i.e. |a - b|^2 minus a per-row constant
    left = np.hstack([-2.0 * zc, np.ones((n, 1), np.float32)])
    right = np.hstack([zc, norms[:, None]]).T.copy()
    out = np.empty(n, dtype=np.int64)
    step = max(1, _DENSE_CELLS // n)
    for start in range(0, n, step):
        rows = np.arange(start, min(n, start + step))
        idx = np.arange(rows.size)
        approx = left[rows] @ right
        approx[idx, rows] = np.inf
        first = np.argmin(approx, axis=1)
        best = approx[idx, first].astype(float)
        approx[idx, first] = np.inf
        second = approx.min(axis=1)
        out[rows] = first
        for i in np.flatnonzero(second <= best + 2.0 * slack[rows]):
            approx[i, first[i]] = best[i]
            cand = np.flatnonzero(approx[i].astype(float) <= best[i] + 2.0 * slack[rows[i]])
            out[rows[i]] = _resolve_exact(z, int(rows[i]), cand, seed)
    return out


_DENSE_CELLS = 4_000_000


def _use_dense(n: int, d: int) -> bool:
    # measured crossover: kd-trees degrade with dimension, dense search with n
    if d >= 9:
        return n <= 12_000
    if d >= 6:
        return n <= 2_500
    return d >= 3 and n <= 1_000


def nearest_neighbors(points, seed: int = 0) -> NeighborIndex:
    """Exact Euclidean nearest neighbours, ties broken uniformly at random.

    For each ``k`` the full argmin set over ``j != k`` is collected and one
    member is drawn from a stream keyed on ``(seed, k)``. Expected cost is
    ``O(n log n)`` for fixed low dimension (kd-tree); high-dimensional
    inputs of moderate size use a blocked dense search instead.
    """
    z = _as_points(points)
    n = z.shape[0]
    if n < 2:
        raise InputError("nearest neighbours need at least 2 points")
    if _use_dense(n, z.shape[1]):
        return NeighborIndex(n_of=_dense_neighbors(z, seed), seed=seed)
    tree = cKDTree(z)
    kq = min(3, n)
    _, idx = tree.query(z, k=kq, workers=worker_count())
    idx = np.asarray(idx, dtype=np.int64).reshape(n, kq)
    rows = np.arange(n)
    sq = _sq_dist(z, np.repeat(rows, kq), idx.ravel()).reshape(n, kq)
    is_self = idx == rows[:, None]
    sq[is_self] = np.inf
    best = sq.min(axis=1)
    near = sq <= best[:, None] * (1.0 + _GATHER_RTOL)
    resolved = is_self.any(axis=1) & (near.sum(axis=1) == 1)

    out = idx[rows, np.argmin(sq, axis=1)]
    for k in np.flatnonzero(~resolved):
        radius = np.sqrt(best[k]) * (1.0 + _GATHER_RTOL) + 1e-300
        cand = np.asarray(tree.query_ball_point(z[k], r=radius), dtype=np.int64)
        if cand.size <= 1:
            # radius rounding pushed the true neighbour out; take the k-d candidates
            cand = idx[k]
        out[k] = _resolve_exact(z, int(k), cand, seed)
    return NeighborIndex(n_of=out, seed=seed)


def nearest_neighbors_bruteforce(points, seed: int = 0) -> NeighborIndex:
    """O(n^2) exhaustive search with the same tie protocol; a testing oracle."""
    z = _as_points(points)
    n = z.shape[0]
    if n < 2:
        raise InputError("nearest neighbours need at least 2 points")
    out = np.empty(n, dtype=np.int64)
    everyone = np.arange(n)
    for k in range(n):
        out[k] = _resolve_exact(z, k, everyone, seed)
    return NeighborIndex(n_of=out, seed=seed)


def _t_from_neighbors(ranks: RankData, n_of: np.ndarray) -> float:
    n = ranks.r.size
    den = int(np.sum(ranks.l * (n - ranks.l)))
    if den == 0:
        raise DegenerateError("response is constant; T_n denominator is zero")
    num = int(np.sum(n * np.minimum(ranks.r, ranks.r[n_of]) - ranks.l * ranks.l))
    return num / den


def _check_pair(response, conditioners) -> tuple[np.ndarray, np.ndarray]:
    y = _as_vector(response)
    z = _as_points(conditioners)
    if z.shape[0] != y.size:
        raise InputError(f"response has {y.size} rows, conditioners have {z.shape[0]}")
    if y.size < 3:
        raise InputError("T_n needs at least 3 observations")
    return y, z


def t_statistic(response, conditioners, seed: int = 0, ranks: RankData | None = None) -> float:
    """Raw (unclamped) ``T_n(Y | Z)``; may fall slightly outside [0, 1]."""
    y, z = _check_pair(response, conditioners)
    ranks = compute_ranks(y) if ranks is None else ranks
    return _t_from_neighbors(ranks, nearest_neighbors(z, seed).n_of)


def t_statistic_bruteforce(response, conditioners, seed: int = 0) -> float:
    y, z = _check_pair(response, conditioners)
    return _t_from_neighbors(compute_ranks(y), nearest_neighbors_bruteforce(z, seed).n_of)
