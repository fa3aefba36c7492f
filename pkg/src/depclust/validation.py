"""Cluster-validity criteria, choice of the cluster count, and partition agreement."""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .clustering import Dendrogram, Partition, cut
from .dissimilarity import AggregatorSpec, pair_dissimilarity
from .errors import ResourceError, SpecError
from .estimators import SampleMatrix
from .predictability import DEFAULT_PERM_BUDGET, PredictabilityEstimator

DEFAULT_MAX_BLOCK = 8
RULES = ("tradeoff", "silhouette")


def _matrix(d, m: int) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape != (m, m):
        raise SpecError(f"expected a {m}x{m} matrix, got shape {d.shape}")
    return d


def adiam(partition: Partition, similarity) -> float:
    """Mean over blocks of the smallest within-block similarity (1 for singletons)."""
    s = _matrix(similarity, partition.m)
    diams = []
    for b in partition.blocks:
        if len(b) == 1:
            diams.append(1.0)
        else:
            sub = s[np.ix_(b, b)]
            diams.append(float(sub[np.triu_indices(len(b), 1)].min()))
    return float(np.mean(diams))


def msplit(partition: Partition, similarity) -> float:
    """Largest similarity across any block boundary."""
    if partition.k < 2:
        raise SpecError("msplit needs at least two blocks")
    s = _matrix(similarity, partition.m)
    assign = partition.assignment()
    cross = assign[:, None] != assign[None, :]
    return float(s[cross].max())


def silhouette(partition: Partition, dissimilarity) -> float:
    """Mean silhouette width; variables in singleton blocks score 0."""
    if partition.k < 2:
        raise SpecError("silhouette needs at least two blocks")
    d = _matrix(dissimilarity, partition.m)
    scores = np.zeros(partition.m)
    for b in partition.blocks:
        if len(b) == 1:
            continue
        for i in b:
            others = [j for j in b if j != i]
            a = float(d[i, others].mean())
            bmin = min(float(d[i, list(c)].mean()) for c in partition.blocks if c is not b)
            top = max(a, bmin)
            scores[i] = 0.0 if top == 0.0 else (bmin - a) / top
    return float(scores.mean())


# -- subset-search versions -------------------------------------------------

def _subsets(items: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def _disjoint_pairs(block: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Unordered pairs of disjoint non-empty subsets of ``block``."""
    for xs in _subsets(block):
        rest = tuple(i for i in block if i not in xs)
        for ys in _subsets(rest):
            if xs < ys:
                yield xs, ys


def _check_block(size: int, max_block: int, what: str) -> None:
    if size > max_block:
        raise ResourceError(f"{what} has {size} variables, above max_block={max_block}")


def _estimator(data, seed, perm_budget, estimator):
    return estimator if estimator is not None else PredictabilityEstimator(data, seed, perm_budget)


def adiam_multi(partition: Partition, data: SampleMatrix, spec: AggregatorSpec, seed: int = 0,
                perm_budget: int = DEFAULT_PERM_BUDGET, max_block: int = DEFAULT_MAX_BLOCK,
                estimator: Optional[PredictabilityEstimator] = None) -> float:
    """``adiam`` with each diameter taken over all disjoint subset pairs of the block."""
    est = _estimator(data, seed, perm_budget, estimator)
    diams = []
    for b in partition.blocks:
        _check_block(len(b), max_block, "block")
        if len(b) == 1:
            diams.append(1.0)
            continue
        worst = max(pair_dissimilarity(x, y, data, spec, estimator=est)
                    for x, y in _disjoint_pairs(b))
        diams.append(1.0 - worst)
    return float(np.mean(diams))


def msplit_multi(partition: Partition, data: SampleMatrix, spec: AggregatorSpec, seed: int = 0,
                 perm_budget: int = DEFAULT_PERM_BUDGET, max_block: int = DEFAULT_MAX_BLOCK,
                 estimator: Optional[PredictabilityEstimator] = None) -> float:
    """``msplit`` with each split taken over subsets of a block and of its complement."""
    if partition.k < 2:
        raise SpecError("msplit needs at least two blocks")
    est = _estimator(data, seed, perm_budget, estimator)
    best = 0.0
    for b in partition.blocks:
        comp = tuple(i for i in range(partition.m) if i not in b)
        _check_block(len(b), max_block, "block")
        _check_block(len(comp), max_block, "block complement")
        closest = min(pair_dissimilarity(x, y, data, spec, estimator=est)
                      for x in _subsets(b) for y in _subsets(comp))
        best = max(best, 1.0 - closest)
    return float(best)


# -- curves and selection -----------------------------------------------------

@dataclass(frozen=True)
class ValidityCurve:
    ks: tuple[int, ...]
    adiam: tuple[float, ...]
    msplit: tuple[float, ...]
    silhouette: tuple[float, ...]

    def chosen_k(self, rule: str = "tradeoff") -> int:
        return choose_k(self, rule)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "adiam", "msplit", "silhouette"])
        for row in zip(self.ks, self.adiam, self.msplit, self.silhouette):
            w.writerow([row[0]] + [f"{x:.6f}" for x in row[1:]])
        return buf.getvalue()


def validity_curve(dendrogram: Dendrogram, pairwise_dissimilarity) -> ValidityCurve:
    """Pairwise criteria for every cut ``k = 2..m-1``."""
    m = dendrogram.m
    d = _matrix(pairwise_dissimilarity, m)
    sim = 1.0 - d
    ks = tuple(range(2, m))
    if not ks:
        raise SpecError("a validity curve needs at least 3 variables")
    parts = [cut(dendrogram, k) for k in ks]
    return ValidityCurve(
        ks=ks,
        adiam=tuple(adiam(p, sim) for p in parts),
        msplit=tuple(msplit(p, sim) for p in parts),
        silhouette=tuple(silhouette(p, d) for p in parts),
    )


def choose_k(curve: ValidityCurve, rule: str = "tradeoff") -> int:
    """``tradeoff``: argmax of adiam - msplit; ``silhouette``: argmax silhouette.

    The smallest k wins ties.
    """
    if rule == "tradeoff":
        score = np.asarray(curve.adiam) - np.asarray(curve.msplit)
    elif rule == "silhouette":
        score = np.asarray(curve.silhouette)
    else:
        raise SpecError(f"unknown rule {rule!r}; choose from {RULES}")
    if score.size == 0:
        raise SpecError("empty validity curve")
    return int(curve.ks[int(np.argmax(score))])


# -- agreement ---------------------------------------------------------------

def _pair_counts(a: Partition, b: Partition) -> tuple[int, int, int, int]:
    if a.m != b.m:
        raise SpecError(f"partitions cover different universes ({a.m} vs {b.m} variables)")
    la, lb = a.assignment(), b.assignment()
    iu = np.triu_indices(a.m, 1)
    same_a = (la[:, None] == la[None, :])[iu]
    same_b = (lb[:, None] == lb[None, :])[iu]
    tp = int(np.sum(same_a & same_b))
    fp = int(np.sum(same_a & ~same_b))
    fn = int(np.sum(~same_a & same_b))
    tn = int(np.sum(~same_a & ~same_b))
    return tp, fp, fn, tn


def rand_index(a: Partition, b: Partition) -> float:
    tp, fp, fn, tn = _pair_counts(a, b)
    total = tp + fp + fn + tn
    return 1.0 if total == 0 else (tp + tn) / total


def fowlkes_mallows(a: Partition, b: Partition) -> float:
    """0 when either precision or recall has an empty denominator."""
    tp, fp, fn, _ = _pair_counts(a, b)
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    # one product of integers keeps the value exactly symmetric in (a, b)
    return tp / math.sqrt((tp + fp) * (tp + fn))
