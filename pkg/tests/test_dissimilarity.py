import math

import numpy as np
import pytest
from scipy import integrate, stats

from depclust.dissimilarity import (AggregatorSpec, copula_cdf, dissimilarity, frank_tau,
                                    joe_tau, linkage_dissimilarity, pair_dissimilarity,
                                    parameter_to_tau, tau_to_parameter)
from depclust.errors import SpecError
from depclust.estimators import SampleMatrix
from depclust.simulation import sample_copula

PI = AggregatorSpec("copula", "pi")
AVE = AggregatorSpec("average")


# -- spec parsing ----------------------------------------------------------------

@pytest.mark.parametrize("text,kind,family,param", [
    ("average", "average", None, 0.0),
    ("copula:pi", "copula", "pi", 0.0),
    ("copula:gaussian:0.0", "copula", "gaussian", 0.0),
    ("copula_dual:M", "copula_dual", "M", 0.0),
    ("copula_dual:W", "copula_dual", "W", 0.0),
    ("copula:clayton:2", "copula", "clayton", 2.0),
    ("dual:gumbel:1.5", "copula_dual", "gumbel", 1.5),
])
def test_parse(text, kind, family, param):
    spec = AggregatorSpec.parse(text)
    assert (spec.kind, spec.family, spec.parameter) == (kind, family, param)
    assert AggregatorSpec.parse(str(spec)) == spec


@pytest.mark.parametrize("text", ["copula:W:0", "copula:W", "copula:clayton:0",
                                  "copula:clayton:-0.5", "copula:gumbel:0.5",
                                  "copula:gaussian:-1", "average:pi", "nonsense",
                                  "copula:joe:0.9", "copula:gaussian:1.5", "copula:foo:1"])
def test_parse_rejects(text):
    with pytest.raises(SpecError):
        AggregatorSpec.parse(text)


# -- copula values -----------------------------------------------------------------

def test_closed_form_values():
    assert copula_cdf(PI, 0.5, 0.5) == 0.25
    assert copula_cdf(AggregatorSpec("copula", "M"), 0.3, 0.7) == 0.3
    clayton = AggregatorSpec("copula", "clayton", 2.0)
    assert copula_cdf(clayton, 0.5, 0.5) == pytest.approx(7 ** -0.5, abs=1e-15)
    w = AggregatorSpec("copula_dual", "W")
    assert copula_cdf(w, 0.3, 0.5) == 0.0
    assert copula_cdf(w, 0.8, 0.5) == pytest.approx(0.3)


def gaussian_oracle(u, v, rho):
    # Plackett: dC/drho equals the bivariate normal density at (h, k)
    h, k = stats.norm.ppf(u), stats.norm.ppf(v)

    def dens(r):
        return math.exp(-(h * h - 2 * r * h * k + k * k) / (2 * (1 - r * r))) / (
            2 * math.pi * math.sqrt(1 - r * r))

    return u * v + integrate.quad(dens, 0.0, rho, epsabs=1e-13, epsrel=1e-12)[0]


@pytest.mark.parametrize("rho", [-0.95, -0.5, 0.0, 0.3, 0.7, 0.93, 0.99])
def test_gaussian_against_quadrature(rho):
    spec = AggregatorSpec("copula_dual", "gaussian", rho)
    for u in (0.01, 0.2, 0.5, 0.77, 0.999):
        for v in (0.03, 0.4, 0.6, 0.95):
            assert copula_cdf(spec, u, v) == pytest.approx(gaussian_oracle(u, v, rho), abs=1e-7)


def test_gaussian_boundaries():
    assert copula_cdf(AggregatorSpec("copula_dual", "gaussian", 1.0), 0.3, 0.6) == pytest.approx(0.3)
    assert copula_cdf(AggregatorSpec("copula_dual", "gaussian", -1.0), 0.7, 0.6) == pytest.approx(0.3)


def test_boundary_conditions_all_families():
    for spec in _all_specs():
        for u in (0.0, 0.25, 0.9, 1.0):
            assert copula_cdf(spec, u, 0.0) == 0.0
            assert copula_cdf(spec, u, 1.0) == pytest.approx(u, abs=1e-15)


def _all_specs():
    out = [AggregatorSpec("copula", "pi"), AggregatorSpec("copula", "M"),
           AggregatorSpec("copula_dual", "W")]
    for fam, params in [("gaussian", (-0.8, 0.0, 0.5, 0.95)), ("clayton", (0.5, 2.0, 10.0)),
                        ("gumbel", (1.0, 1.7, 5.0)), ("frank", (-6.0, 0.5, 12.0)),
                        ("joe", (1.0, 2.0, 6.0))]:
        for p in params:
            kind = "copula_dual" if (fam == "frank" and p < 0) else "copula"
            out.append(AggregatorSpec(kind, fam, p))
    return out


@pytest.mark.parametrize("spec", _all_specs(), ids=str)
def test_frechet_bounds_grid(spec):
    tol = 1e-6 if spec.family == "gaussian" else 1e-9
    g = np.linspace(0, 1, 101)
    for u in g:
        for v in g:
            c = copula_cdf(spec, u, v)
            assert max(u + v - 1, 0) - tol <= c <= min(u, v) + tol


@pytest.mark.parametrize("spec", _all_specs(), ids=str)
def test_two_increasing(spec):
    rng = np.random.default_rng(0)
    for _ in range(300):
        u1, u2 = np.sort(rng.uniform(size=2))
        v1, v2 = np.sort(rng.uniform(size=2))
        vol = (copula_cdf(spec, u2, v2) - copula_cdf(spec, u2, v1)
               - copula_cdf(spec, u1, v2) + copula_cdf(spec, u1, v1))
        assert vol >= -1e-9


# -- dissimilarity values ---------------------------------------------------------

def test_dissimilarity_examples():
    assert dissimilarity(PI, 1 / 9, 1.0) == 0.0
    assert dissimilarity(AVE, 2 / 5, 1 / 3) == pytest.approx(19 / 30, abs=1e-15)
    assert dissimilarity(PI, 0.0, 0.0) == 1.0
    assert dissimilarity(AVE, 0.0, 0.0) == 1.0


def test_dissimilarity_rejects_out_of_range():
    with pytest.raises(SpecError):
        dissimilarity(AVE, 1.2, 0.5)


def test_linkage_examples():
    pw = np.array([[0, 0.1, 0.2, 0.6],
                   [0.1, 0, 0.4, 0.8],
                   [0.2, 0.4, 0, 0.3],
                   [0.6, 0.8, 0.3, 0]])
    assert linkage_dissimilarity("single", pw, (0, 1), (2, 3)) == 0.2
    assert linkage_dissimilarity("average", pw, (0, 1), (2, 3)) == pytest.approx(0.5)
    assert linkage_dissimilarity("complete", pw, (0, 1), (2, 3)) == 0.8
    for method in ("single", "average", "complete"):
        assert linkage_dissimilarity(method, pw, (1,), (3,)) == 0.8
    with pytest.raises(SpecError):
        linkage_dissimilarity("ward", pw, (0,), (1,))


def test_pair_dissimilarity_marshall_olkin_and_w():
    u = sample_copula("marshall_olkin", {"alpha": 1.0, "beta": 0.5}, 2, 10_000, seed=2)
    d = SampleMatrix(u)
    assert abs(pair_dissimilarity([0], [1], d, PI) - 0.4) <= 0.07
    w = sample_copula("W", {}, 2, 10_000, seed=2)
    assert pair_dissimilarity([0], [1], SampleMatrix(w), AVE) <= 0.05


def test_pair_dissimilarity_symmetric():
    x = np.random.default_rng(0).normal(size=(300, 4))
    x[:, 3] += x[:, 0]
    d = SampleMatrix(x)
    for spec in (PI, AVE, AggregatorSpec("copula_dual", "gaussian", 0.4)):
        assert pair_dissimilarity([0, 1], [2, 3], d, spec, seed=4) == \
            pair_dissimilarity([3, 2], [1, 0], d, spec, seed=4)


# -- tau conversion --------------------------------------------------------------

def test_tau_closed_forms():
    assert tau_to_parameter("clayton", 0.5) == pytest.approx(2.0)
    assert tau_to_parameter("gumbel", 0.0) == 1.0
    assert tau_to_parameter("gaussian", 0.5) == pytest.approx(math.sin(math.pi / 4))


def joe_tau_series(theta, terms=200_000):
    k = np.arange(1, terms + 1, dtype=float)
    return 1.0 - 4.0 * np.sum(1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0)))


def frank_tau_simpson(theta):
    t = np.linspace(0.0, theta, 20_001)
    f = np.where(t > 0, t / np.expm1(np.where(t > 0, t, 1.0)), 1.0)
    d1 = integrate.simpson(f, x=t) / theta
    return 1.0 - 4.0 / theta * (1.0 - d1)


@pytest.mark.parametrize("theta", [1.2, 2.0, 3.5, 8.0])
def test_joe_tau_against_series(theta):
    assert joe_tau(theta) == pytest.approx(joe_tau_series(theta), abs=1e-5)


@pytest.mark.parametrize("theta", [0.3, 2.0, 7.5, 30.0])
def test_frank_tau_against_simpson(theta):
    assert frank_tau(theta) == pytest.approx(frank_tau_simpson(theta), abs=1e-9)
    assert frank_tau(-theta) == pytest.approx(-frank_tau(theta), abs=1e-12)


@pytest.mark.parametrize("family", ["frank", "joe", "clayton", "gumbel", "gaussian"])
@pytest.mark.parametrize("tau", [0.05, 0.3, 0.6, 0.9, 0.99])
def test_tau_round_trip(family, tau):
    theta = tau_to_parameter(family, tau)
    assert abs(parameter_to_tau(family, theta) - tau) <= 1e-8


def test_frank_negative_tau():
    theta = tau_to_parameter("frank", -0.4)
    assert theta < 0 and abs(frank_tau(theta) + 0.4) <= 1e-8


@pytest.mark.parametrize("family,tau", [("gumbel", -0.1), ("joe", -0.2), ("clayton", -0.5),
                                        ("frank", 1.0), ("gaussian", -1.0)])
def test_unattainable_tau(family, tau):
    with pytest.raises(SpecError):
        tau_to_parameter(family, tau)
