"""Agglomerative clustering of variables under a set dissimilarity."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .dissimilarity import (LINKAGES, AggregatorSpec, linkage_dissimilarity,
                            pair_dissimilarity, pairwise_matrix)
from .errors import SpecError
from .estimators import SampleMatrix
from .predictability import DEFAULT_PERM_BUDGET, PredictabilityEstimator

Key = tuple[int, ...]


@dataclass(frozen=True)
class Partition:
    """Disjoint, non-empty blocks of column indices covering ``0..m-1``.

    Blocks are stored sorted, and ordered by their smallest member.
    """

    blocks: tuple[Key, ...]
    m: int

    def __post_init__(self) -> None:
        blocks = tuple(sorted((tuple(sorted(int(i) for i in b)) for b in self.blocks),
                              key=lambda b: b[:1]))
        seen: list[int] = [i for b in blocks for i in b]
        if any(len(b) == 0 for b in blocks):
            raise SpecError("partition blocks must be non-empty")
        if len(seen) != len(set(seen)):
            raise SpecError("partition blocks overlap")
        if sorted(seen) != list(range(self.m)):
            raise SpecError(f"partition does not cover exactly the {self.m} variables")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_labels(cls, blocks: Iterable[Iterable[str]], labels: Sequence[str]) -> "Partition":
        index = {lab: j for j, lab in enumerate(labels)}
        out = []
        for block in blocks:
            try:
                out.append(tuple(index[lab] for lab in block))
            except KeyError as exc:
                raise SpecError(f"unknown variable {exc.args[0]!r} in partition") from None
        return cls(tuple(out), len(labels))

    @property
    def k(self) -> int:
        return len(self.blocks)

    def assignment(self) -> np.ndarray:
        """Block number of each variable."""
        out = np.empty(self.m, dtype=np.int64)
        for b, block in enumerate(self.blocks):
            out[list(block)] = b
        return out

    def label_blocks(self, labels: Sequence[str]) -> list[list[str]]:
        return [[labels[i] for i in b] for b in self.blocks]


@dataclass(frozen=True)
class Merge:
    left: Key
    right: Key
    height: float
    key: Key


@dataclass(frozen=True)
class Dendrogram:
    merges: tuple[Merge, ...]
    leaf_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        m = len(self.leaf_labels)
        if len(self.merges) != m - 1:
            raise SpecError(f"a dendrogram over {m} leaves needs {m - 1} merges")
        live = {(j,) for j in range(m)}
        for mg in self.merges:
            if mg.left not in live or mg.right not in live or mg.left == mg.right:
                raise SpecError(f"merge of {mg.left} and {mg.right} uses an unavailable cluster")
            if mg.key != tuple(sorted(mg.left + mg.right)):
                raise SpecError(f"merge key {mg.key} is not the union of its inputs")
            live -= {mg.left, mg.right}
            live.add(mg.key)

    @property
    def m(self) -> int:
        return len(self.leaf_labels)

    @property
    def heights(self) -> np.ndarray:
        return np.array([mg.height for mg in self.merges])

    def has_inversions(self) -> bool:
        h = self.heights
        return bool(np.any(np.diff(h) < 0))

    def cut(self, k: int) -> Partition:
        return cut(self, k)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.leaf_labels),
            "merges": [{"left": list(mg.left), "right": list(mg.right),
                        "height": mg.height, "key": list(mg.key)} for mg in self.merges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "Dendrogram":
        merges = tuple(Merge(tuple(d["left"]), tuple(d["right"]), float(d["height"]),
                             tuple(d["key"])) for d in obj["merges"])
        return cls(merges, tuple(obj["labels"]))

    def to_newick(self) -> str:
        """Newick string; a node sits at its merge height, leaves at 0.

        Branch length is parent height minus child height, so inversions give
        negative lengths rather than being hidden.
        """
        heights: dict[Key, float] = {(j,): 0.0 for j in range(self.m)}
        text: dict[Key, str] = {(j,): _newick_label(lab) for j, lab in enumerate(self.leaf_labels)}
        for mg in self.merges:
            parts = []
            for child in (mg.left, mg.right):
                parts.append(f"{text.pop(child)}:{mg.height - heights[child]:.6f}")
            text[mg.key] = "(" + ",".join(parts) + ")"
            heights[mg.key] = mg.height
        (root,) = text.values()
        return root + ";\n"


def _newick_label(label: str) -> str:
    if any(ch in label for ch in " ,:;()[]'\t"):
        return "'" + label.replace("'", "''") + "'"
    return label


def cut(dendrogram: Dendrogram, k: int) -> Partition:
    """The ``k`` classes present after the first ``m - k`` merges."""
    m = dendrogram.m
    if not 1 <= int(k) <= m:
        raise SpecError(f"k must lie in 1..{m}, got {k}")
    live = {(j,) for j in range(m)}
    for mg in dendrogram.merges[: m - int(k)]:
        live -= {mg.left, mg.right}
        live.add(mg.key)
    return Partition(tuple(live), m)


@dataclass(frozen=True)
class Backend:
    """``multivariate`` re-estimates set dissimilarities from the data;
    ``linkage`` combines (1,1)-dissimilarities by single/average/complete."""

    spec: AggregatorSpec
    kind: str = "multivariate"
    method: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("multivariate", "linkage"):
            raise SpecError(f"unknown backend {self.kind!r}")
        if self.kind == "linkage" and self.method not in LINKAGES:
            raise SpecError(f"linkage method must be one of {LINKAGES}, got {self.method!r}")
        if self.kind == "multivariate" and self.method is not None:
            raise SpecError("the multivariate backend takes no linkage method")

    @classmethod
    def parse(cls, text: str, spec: AggregatorSpec) -> "Backend":
        """``multivariate`` or ``linkage:<single|average|complete>``."""
        head, _, rest = text.strip().lower().partition(":")
        if head == "multivariate" and not rest:
            return cls(spec)
        if head == "linkage":
            return cls(spec, "linkage", rest or "average")
        raise SpecError(f"unknown backend {text!r}; use 'multivariate' or 'linkage:<method>'")

    def __str__(self) -> str:
        return self.kind if self.method is None else f"linkage:{self.method}"


def agglomerate(data: SampleMatrix, backend: Backend, seed: int = 0,
                perm_budget: int = DEFAULT_PERM_BUDGET,
                estimator: Optional[PredictabilityEstimator] = None) -> Dendrogram:
    """Bottom-up merging until one class remains.

    Each round merges the pair with the smallest dissimilarity; ties go to the
    lexicographically smallest pair of cluster keys. Pair values are cached
    across rounds, so only pairs involving the new cluster are evaluated.
    """
    m = data.m
    if m < 2:
        raise SpecError("clustering needs at least 2 variables")
    est = estimator if estimator is not None else PredictabilityEstimator(data, seed, perm_budget)
    if backend.kind == "linkage":
        pw = pairwise_matrix(data, backend.spec, estimator=est)

        def diss(a: Key, b: Key) -> float:
            return linkage_dissimilarity(backend.method, pw, a, b)
    else:
        def diss(a: Key, b: Key) -> float:
            return pair_dissimilarity(a, b, data, backend.spec, estimator=est)

    live: list[Key] = [(j,) for j in range(m)]
    cache: dict[tuple[Key, Key], float] = {}
    merges: list[Merge] = []
    while len(live) > 1:
        best: Optional[tuple[float, Key, Key]] = None
        for i, a in enumerate(live):
            for b in live[i + 1:]:
                pair = (a, b) if a < b else (b, a)
                if pair not in cache:
                    cache[pair] = diss(*pair)
                cand = (cache[pair], pair[0], pair[1])
                if best is None or cand < best:
                    best = cand
        h, a, b = best
        key = tuple(sorted(a + b))
        merges.append(Merge(a, b, float(h), key))
        live = sorted([c for c in live if c not in (a, b)] + [key])
    return Dendrogram(tuple(merges), data.labels)
