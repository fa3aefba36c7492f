"""Aggregation maps and the dissimilarity functions built from them.

A dissimilarity between variable sets X and Y combines the two directed
predictabilities ``k_xy = kappa(X | Y)`` and ``k_yx = kappa(Y | X)``:

* ``copula``       -> ``C(1 - k_xy, 1 - k_yx)``   (zero iff one direction is perfect)
* ``copula_dual``  -> ``1 - C(k_xy, k_yx)``       (zero iff both directions are perfect)
* ``average``      -> ``1 - (k_xy + k_yx) / 2``
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.integrate import quad
from scipy.special import digamma, ndtri
from scipy.stats import multivariate_normal

from .errors import SpecError
from .estimators import SampleMatrix
from .predictability import DEFAULT_PERM_BUDGET, PredictabilityEstimator, as_variable_set

KINDS = ("copula", "copula_dual", "average")
FAMILIES = ("pi", "M", "W", "gaussian", "gumbel", "clayton", "frank", "joe")

_FAMILY_ALIASES = {
    "pi": "pi", "π": "pi", "Π": "pi", "independence": "pi", "indep": "pi", "product": "pi",
    "m": "M", "upper": "M", "comonotone": "M",
    "w": "W", "lower": "W", "countermonotone": "W",
    "gaussian": "gaussian", "normal": "gaussian", "gauss": "gaussian",
    "gumbel": "gumbel", "clayton": "clayton", "frank": "frank", "joe": "joe",
}
_KIND_ALIASES = {
    "copula": "copula", "cop": "copula",
    "copula_dual": "copula_dual", "dual": "copula_dual", "copula-dual": "copula_dual",
    "average": "average", "ave": "average", "avg": "average",
}
_NO_PARAMETER = ("pi", "M", "W")


@dataclass(frozen=True)
class AggregatorSpec:
    kind: str
    family: Optional[str] = None
    parameter: float = 0.0

    def __post_init__(self) -> None:
        kind = _KIND_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise SpecError(f"unknown aggregator kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "average":
            object.__setattr__(self, "family", None)
            object.__setattr__(self, "parameter", 0.0)
            return
        if self.family is None:
            raise SpecError(f"aggregator kind {kind!r} needs a copula family")
        family = _FAMILY_ALIASES.get(str(self.family).lower(), _FAMILY_ALIASES.get(str(self.family)))
        if family is None:
            raise SpecError(f"unknown copula family {self.family!r}")
        object.__setattr__(self, "family", family)
        theta = float(self.parameter)
        if not math.isfinite(theta):
            raise SpecError("copula parameter must be finite")
        object.__setattr__(self, "parameter", theta)
        _validate_parameter(kind, family, theta)

    @classmethod
    def parse(cls, text: str) -> "AggregatorSpec":
        """Parse ``kind:family:parameter`` (``average`` needs no further fields)."""
        parts = [p.strip() for p in str(text).strip().split(":")]
        if not parts or not parts[0]:
            raise SpecError("empty aggregator spec")
        kind = _KIND_ALIASES.get(parts[0].lower())
        if kind is None:
            raise SpecError(f"unknown aggregator kind {parts[0]!r}")
        if kind == "average":
            if len(parts) > 1 and any(parts[1:]):
                raise SpecError("'average' takes no family or parameter")
            return cls("average")
        if len(parts) < 2 or len(parts) > 3:
            raise SpecError(f"expected kind:family[:parameter], got {text!r}")
        family = parts[1]
        if len(parts) == 3 and parts[2]:
            try:
                theta = float(parts[2])
            except ValueError:
                raise SpecError(f"copula parameter {parts[2]!r} is not a number") from None
        elif _FAMILY_ALIASES.get(family.lower(), family) in _NO_PARAMETER:
            theta = 0.0
        else:
            raise SpecError(f"family {family!r} needs a parameter")
        return cls(kind, family, theta)

    def __str__(self) -> str:
        if self.kind == "average":
            return "average"
        return f"{self.kind}:{self.family}:{self.parameter!r}"


def _validate_parameter(kind: str, family: str, theta: float) -> None:
    # type (A) needs C > 0 on (0,1]^2; type (B) accepts any copula
    if family == "W" and kind == "copula":
        raise SpecError("W vanishes on part of (0,1]^2 and cannot build a type (A) dissimilarity")
    if family == "gaussian":
        lo_ok = theta > -1.0 if kind == "copula" else theta >= -1.0
        if not (lo_ok and theta <= 1.0):
            raise SpecError(f"gaussian correlation {theta} out of range for kind {kind!r}")
    elif family in ("gumbel", "joe"):
        if theta < 1.0:
            raise SpecError(f"{family} parameter must be >= 1, got {theta}")
    elif family == "clayton":
        if kind == "copula" and theta <= 0.0:
            raise SpecError("clayton parameter must be > 0 for a type (A) dissimilarity")
        if theta < -1.0:
            raise SpecError("clayton parameter must be >= -1")


def _clayton(u: float, v: float, theta: float) -> float:
    if theta == 0.0:
        return u * v
    if theta < 0:
        return max(u ** -theta + v ** -theta - 1.0, 0.0) ** (-1.0 / theta)
    # log space: u ** -theta overflows for tiny u
    a, b = -theta * math.log(u), -theta * math.log(v)
    top = max(a, b)
    log_base = top + math.log(math.exp(a - top) + math.exp(b - top) - math.exp(-top))
    return math.exp(-log_base / theta)


def _gumbel(u: float, v: float, theta: float) -> float:
    s = (-math.log(u)) ** theta + (-math.log(v)) ** theta
    return math.exp(-(s ** (1.0 / theta)))


def _frank(u: float, v: float, theta: float) -> float:
    if theta == 0.0:
        return u * v
    num = math.expm1(-theta * u) * math.expm1(-theta * v)
    return -math.log1p(num / math.expm1(-theta)) / theta


def _joe(u: float, v: float, theta: float) -> float:
    a = (1.0 - u) ** theta
    b = (1.0 - v) ** theta
    return 1.0 - (a + b - a * b) ** (1.0 / theta)


def _gaussian(u: float, v: float, rho: float) -> float:
    if rho >= 1.0:
        return min(u, v)
    if rho <= -1.0:
        return max(u + v - 1.0, 0.0)
    cov = [[1.0, rho], [rho, 1.0]]
    return float(multivariate_normal.cdf([ndtri(u), ndtri(v)], cov=cov))


_CDFS = {
    "pi": lambda u, v, _t: u * v,
    "M": lambda u, v, _t: min(u, v),
    "W": lambda u, v, _t: max(u + v - 1.0, 0.0),
    "gaussian": _gaussian,
    "gumbel": _gumbel,
    "clayton": _clayton,
    "frank": _frank,
    "joe": _joe,
}


def copula_cdf(spec: AggregatorSpec, u: float, v: float) -> float:
    """Evaluate the aggregator's copula at ``(u, v)`` in the unit square."""
    if spec.family is None:
        raise SpecError("the average rule has no copula")
    u, v = float(u), float(v)
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        raise SpecError(f"copula arguments must lie in [0,1]^2, got ({u}, {v})")
    if u == 0.0 or v == 0.0:
        return 0.0
    if u == 1.0:
        return v
    if v == 1.0:
        return u
    # every implemented family is symmetric; ordering the arguments makes the
    # floating-point result symmetric as well
    if u > v:
        u, v = v, u
    c = _CDFS[spec.family](u, v, spec.parameter)
    return min(max(c, max(u + v - 1.0, 0.0)), u)


def dissimilarity(spec: AggregatorSpec, kappa_xy: float, kappa_yx: float) -> float:
    a, b = float(kappa_xy), float(kappa_yx)
    for k in (a, b):
        if not 0.0 <= k <= 1.0:
            raise SpecError(f"predictability values must lie in [0,1], got {k}")
    if spec.kind == "average":
        return 1.0 - (a + b) / 2.0
    if spec.kind == "copula":
        return copula_cdf(spec, 1.0 - a, 1.0 - b)
    return 1.0 - copula_cdf(spec, a, b)


def pair_dissimilarity(set_x, set_y, data: SampleMatrix, spec: AggregatorSpec, seed: int = 0,
                       perm_budget: int = DEFAULT_PERM_BUDGET,
                       estimator: PredictabilityEstimator | None = None) -> float:
    """Estimate ``d_A(X, Y)`` from two ``kappa`` calls, one per direction."""
    est = estimator if estimator is not None else PredictabilityEstimator(data, seed, perm_budget)
    x, y = as_variable_set(set_x), as_variable_set(set_y)
    k_xy = est.kappa(x, y).value
    k_yx = est.kappa(y, x).value
    return dissimilarity(spec, k_xy, k_yx)


@dataclass(frozen=True)
class DissimilarityMatrix:
    entries: np.ndarray
    cluster_keys: tuple[tuple[int, ...], ...]

    def __getitem__(self, ij: tuple[int, int]) -> float:
        return float(self.entries[ij])


def dissimilarity_matrix(clusters: Sequence, data: SampleMatrix, spec: AggregatorSpec,
                         seed: int = 0, perm_budget: int = DEFAULT_PERM_BUDGET,
                         estimator: PredictabilityEstimator | None = None) -> DissimilarityMatrix:
    """Multivariate dissimilarities between every pair of the given clusters.

    The diagonal is set to 0 and is never consulted.
    """
    est = estimator if estimator is not None else PredictabilityEstimator(data, seed, perm_budget)
    keys = tuple(as_variable_set(c).key for c in clusters)
    k = len(keys)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = pair_dissimilarity(keys[i], keys[j], data, spec,
                                                       estimator=est)
    return DissimilarityMatrix(out, keys)


def pairwise_matrix(data: SampleMatrix, spec: AggregatorSpec, seed: int = 0,
                    perm_budget: int = DEFAULT_PERM_BUDGET,
                    estimator: PredictabilityEstimator | None = None) -> np.ndarray:
    """Full ``m x m`` matrix of (1,1)-dissimilarities."""
    return dissimilarity_matrix([(j,) for j in range(data.m)], data, spec, seed, perm_budget,
                                estimator).entries


LINKAGES = ("single", "average", "complete")


def linkage_dissimilarity(method: str, pairwise, set_x, set_y) -> float:
    x, y = list(as_variable_set(set_x)), list(as_variable_set(set_y))
    block = np.asarray(pairwise, dtype=float)[np.ix_(x, y)]
    if method == "single":
        return float(block.min())
    if method == "average":
        return float(block.mean())
    if method == "complete":
        return float(block.max())
    raise SpecError(f"unknown linkage method {method!r}; choose from {LINKAGES}")


# -- Kendall's tau <-> parameter ---------------------------------------------

_FRANK_BRACKET = (1e-6, 1e3)
_JOE_BRACKET = (1.0, 1e3)
_TAU_TOL = 1e-8


def _debye1(x: float) -> float:
    if x == 0.0:
        return 1.0
    ax = abs(x)
    val = quad(lambda t: -t * math.exp(-t) / math.expm1(-t) if t > 0 else 1.0, 0.0, ax,
               epsabs=1e-14, epsrel=1e-13, limit=200)[0] / ax
    # D1(-x) = D1(x) + x / 2
    return val if x > 0 else val + ax / 2.0


def frank_tau(theta: float) -> float:
    if theta == 0.0:
        return 0.0
    return 1.0 - 4.0 / theta * (1.0 - _debye1(theta))


def joe_tau(theta: float) -> float:
    if theta == 1.0:
        return 0.0
    if abs(theta - 2.0) < 1e-6:
        return 2.0 - math.pi ** 2 / 6.0
    return 1.0 + 2.0 / (2.0 - theta) * (float(digamma(2.0)) - float(digamma(2.0 / theta + 1.0)))


def parameter_to_tau(family: str, theta: float) -> float:
    family = _FAMILY_ALIASES.get(family.lower(), family)
    if family == "gaussian":
        return 2.0 / math.pi * math.asin(theta)
    if family == "clayton":
        return theta / (theta + 2.0)
    if family == "gumbel":
        return 1.0 - 1.0 / theta
    if family == "frank":
        return frank_tau(theta)
    if family == "joe":
        return joe_tau(theta)
    if family == "pi":
        return 0.0
    if family == "M":
        return 1.0
    if family == "W":
        return -1.0
    raise SpecError(f"unknown copula family {family!r}")


def _invert(fn, tau: float, lo: float, hi: float, family: str) -> float:
    f_lo, f_hi = fn(lo) - tau, fn(hi) - tau
    if f_lo > 0 or f_hi < 0:
        raise SpecError(f"Kendall's tau {tau} is not attainable by the {family} family "
                        f"within parameter range [{lo}, {hi}]")
    theta = brentq(lambda t: fn(t) - tau, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    if abs(fn(theta) - tau) > _TAU_TOL:
        raise SpecError(f"tau inversion for {family} did not converge")
    return theta


def tau_to_parameter(family: str, tau: float) -> float:
    """Copula parameter with the given Kendall's tau."""
    key = _FAMILY_ALIASES.get(str(family).lower(), family)
    tau = float(tau)
    if not -1.0 < tau < 1.0:
        raise SpecError(f"Kendall's tau must lie in (-1, 1), got {tau}")
    if key == "gaussian":
        return math.sin(math.pi * tau / 2.0)
    if key == "clayton":
        if tau < -1.0 / 3.0:
            raise SpecError("the clayton family only attains tau >= -1/3")
        return 2.0 * tau / (1.0 - tau)
    if key == "gumbel":
        if tau < 0:
            raise SpecError("the gumbel family only attains tau >= 0")
        return 1.0 / (1.0 - tau)
    if key == "frank":
        if tau == 0.0:
            return 0.0
        lo, hi = _FRANK_BRACKET
        if tau > 0:
            return _invert(frank_tau, tau, lo, hi, "frank")
        return -_invert(frank_tau, -tau, lo, hi, "frank")
    if key == "joe":
        if tau < 0:
            raise SpecError("the joe family only attains tau >= 0")
        if tau == 0.0:
            return 1.0
        return _invert(joe_tau, tau, *_JOE_BRACKET, "joe")
    if key == "pi" and tau == 0.0:
        return 0.0
    raise SpecError(f"no tau inversion for family {family!r} at tau={tau}")
