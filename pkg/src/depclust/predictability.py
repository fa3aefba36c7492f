"""Multi-outcome predictability ``T^q_n`` and its permutation average ``kappa``.

``T^q_n(Y | X) = 1 - (q - sum_i T_n(Y_i | X, Y_<i)) / (q - sum_i T_n(Y_i | Y_<i))``
with ``T_n(Y_1 | {}) = 0``; ``kappa`` averages ``T^q_n`` over orderings of ``Y``.

Random streams are keyed on variable *labels*, so an estimate does not depend
on column positions or on the order in which sets are listed.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._seeding import derive_seed, rng_for
from .errors import InputError, SpecError
from .estimators import RankData, SampleMatrix, compute_ranks, nearest_neighbors, _t_from_neighbors

log = logging.getLogger(__name__)

DEFAULT_PERM_BUDGET = 120
_DEGENERATE_DEN = 1e-12


@dataclass(frozen=True)
class VariableSet:
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise SpecError("variable set must be non-empty")
        if len(set(idx)) != len(idx):
            raise SpecError(f"duplicate indices in variable set {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.indices))


def as_variable_set(obj: "VariableSet | Iterable[int] | int") -> VariableSet:
    if isinstance(obj, VariableSet):
        return obj
    if isinstance(obj, (int, np.integer)):
        return VariableSet((int(obj),))
    return VariableSet(tuple(obj))


@dataclass(frozen=True)
class PredictabilityEstimate:
    value: float
    raw: float
    predictors: tuple[int, ...]
    responses: tuple[int, ...]
    perm_count: int
    exact: bool
    seed: int


class PredictabilityEstimator:
    """Memoising evaluator of ``T_n``, ``T^q_n`` and ``kappa`` on one sample.

    Each ``T_n(Y_i | S)`` is keyed on the response label and the *set* of
    conditioning labels, so the many overlapping terms produced by a
    clustering run are computed once.
    """

    def __init__(self, data: SampleMatrix, seed: int = 0, perm_budget: int = DEFAULT_PERM_BUDGET):
        if perm_budget < 1:
            raise SpecError("perm_budget must be a positive integer")
        self.data = data
        self.seed = int(seed)
        self.perm_budget = int(perm_budget)
        self._ranks: dict[int, RankData] = {}
        self._t: dict[tuple[int, frozenset], float] = {}
        self._kappa: dict[tuple[tuple[int, ...], tuple[int, ...]], PredictabilityEstimate] = {}

    # -- helpers -----------------------------------------------------------
    def _label_order(self, cols: Iterable[int]) -> tuple[int, ...]:
        labels = self.data.labels
        return tuple(sorted(cols, key=lambda j: (labels[j], j)))

    def _labels(self, cols: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.data.labels[j] for j in cols)

    def _check_sets(self, responses: VariableSet, predictors: VariableSet) -> None:
        m = self.data.m
        for j in itertools.chain(responses, predictors):
            if not 0 <= j < m:
                raise SpecError(f"column index {j} out of range for {m} variables")
        if set(responses) & set(predictors):
            raise SpecError("response and predictor sets must be disjoint")
        if self.data.n < 3:
            raise InputError("need at least 3 observations")

    def ranks(self, j: int) -> RankData:
        if j not in self._ranks:
            self._ranks[j] = compute_ranks(self.data.column(j))
        return self._ranks[j]

    # -- statistics --------------------------------------------------------
    def t_n(self, response: int, conditioning: Iterable[int]) -> float:
        """``T_n(Y | Z)``; zero for an empty conditioning set."""
        cond = frozenset(conditioning)
        if not cond:
            return 0.0
        key = (response, cond)
        hit = self._t.get(key)
        if hit is not None:
            return hit
        cols = self._label_order(cond)
        seed = derive_seed(self.seed, "T", self.data.labels[response], self._labels(cols))
        z = self.data.values[:, list(cols)]
        value = _t_from_neighbors(self.ranks(response), nearest_neighbors(z, seed).n_of)
        self._t[key] = value
        return value

    def t_q(self, responses: Sequence[int], predictors: Iterable[int]) -> float:
        """``T^q_n`` for the responses in the order given."""
        resp = tuple(responses)
        pred = frozenset(predictors)
        with_pred = sum(self.t_n(y, pred.union(resp[:i])) for i, y in enumerate(resp))
        own = sum(self.t_n(y, resp[:i]) for i, y in enumerate(resp))
        den = len(resp) - own
        if den < _DEGENERATE_DEN:
            log.warning("degenerate T^q denominator for responses %s; returning 1.0",
                        self._labels(resp))
            return 1.0
        # 1 - (q - with_pred) / den, rearranged so that q = 1 reproduces T_n exactly
        return (with_pred - own) / den

    def kappa(self, responses, predictors) -> PredictabilityEstimate:
        resp_set, pred_set = as_variable_set(responses), as_variable_set(predictors)
        self._check_sets(resp_set, pred_set)
        key = (resp_set.key, pred_set.key)
        hit = self._kappa.get(key)
        if hit is not None:
            return hit
        resp = self._label_order(resp_set)
        pred = self._label_order(pred_set)
        q = len(resp)
        if math.factorial(q) <= self.perm_budget:
            orders = list(itertools.permutations(range(q)))
            exact = True
        else:
            rng = rng_for(self.seed, "perm", self._labels(resp), self._labels(pred))
            seen: set[tuple[int, ...]] = set()
            orders = []
            while len(orders) < self.perm_budget:
                sigma = tuple(int(i) for i in rng.permutation(q))
                if sigma not in seen:
                    seen.add(sigma)
                    orders.append(sigma)
            exact = False
        total = 0.0
        for sigma in orders:
            total += self.t_q([resp[i] for i in sigma], pred)
        raw = total / len(orders)
        est = PredictabilityEstimate(
            value=min(max(raw, 0.0), 1.0),
            raw=raw,
            predictors=pred_set.key,
            responses=resp_set.key,
            perm_count=len(orders),
            exact=exact,
            seed=self.seed,
        )
        self._kappa[key] = est
        return est


def t_q(response_set, predictor_set, data: SampleMatrix, seed: int = 0) -> float:
    resp, pred = as_variable_set(response_set), as_variable_set(predictor_set)
    est = PredictabilityEstimator(data, seed)
    est._check_sets(resp, pred)
    return est.t_q(resp.indices, pred.indices)


def kappa(response_set, predictor_set, data: SampleMatrix, seed: int = 0,
          perm_budget: int = DEFAULT_PERM_BUDGET) -> PredictabilityEstimate:
    """Clamped estimate of ``kappa^{q|p}(Y | X)``."""
    return PredictabilityEstimator(data, seed, perm_budget).kappa(response_set, predictor_set)
