"""Seeded copula samplers and declarative simulation scenarios."""
from __future__ import annotations

import ast
import graphlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaln

from ._seeding import derive_seed, rng_for
from .clustering import Partition
from .dissimilarity import tau_to_parameter
from .errors import SpecError
from .estimators import SampleMatrix

COPULA_FAMILIES = ("gaussian", "student_t", "clayton", "gumbel", "frank", "joe",
                   "marshall_olkin", "W", "M", "frechet_mix", "ordinal_sum_pi")

_FAMILY_ALIASES = {
    "gaussian": "gaussian", "normal": "gaussian",
    "student_t": "student_t", "t": "student_t", "student-t": "student_t",
    "clayton": "clayton", "gumbel": "gumbel", "frank": "frank", "joe": "joe",
    "marshall_olkin": "marshall_olkin", "marshall-olkin": "marshall_olkin", "mo": "marshall_olkin",
    "w": "W", "m": "M",
    "frechet_mix": "frechet_mix", "fréchet_mix": "frechet_mix", "mix": "frechet_mix",
    "ordinal_sum_pi": "ordinal_sum_pi", "ordinal_sum_π": "ordinal_sum_pi",
    "ordinal_sum": "ordinal_sum_pi",
}


def _family(name: str) -> str:
    fam = _FAMILY_ALIASES.get(str(name).lower())
    if fam is None:
        raise SpecError(f"unknown copula family {name!r}")
    return fam


def _theta(family: str, params: Mapping[str, float]) -> float:
    if "theta" in params:
        return float(params["theta"])
    if "tau" in params:
        return tau_to_parameter(family, float(params["tau"]))
    raise SpecError(f"{family} needs 'theta' or 'tau'")


def _correlation(params: Mapping, dim: int) -> np.ndarray:
    if "corr" in params:
        corr = np.asarray(params["corr"], dtype=float)
        if corr.shape != (dim, dim):
            raise SpecError(f"correlation matrix must be {dim}x{dim}")
    else:
        if "rho" in params:
            rho = float(params["rho"])
        elif "tau" in params:
            rho = math.sin(math.pi * float(params["tau"]) / 2.0)
        else:
            raise SpecError("elliptical copulas need 'rho', 'tau' or 'corr'")
        corr = np.full((dim, dim), rho)
        np.fill_diagonal(corr, 1.0)
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise SpecError("correlation matrix is not positive definite") from None


def _archimedean(psi, frailty: np.ndarray, rng: np.random.Generator, dim: int) -> np.ndarray:
    e = rng.exponential(size=(frailty.size, dim))
    return psi(e / frailty[:, None])


def _positive_stable(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Kanter's representation; Laplace transform ``exp(-t**alpha)``."""
    th = rng.uniform(0.0, math.pi, size=n)
    w = rng.exponential(size=n)
    a = (np.sin(alpha * th) / np.sin(th) ** (1.0 / alpha)
         * (np.sin((1.0 - alpha) * th) / w) ** ((1.0 - alpha) / alpha))
    return a


def _sibuya(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sibuya(alpha) variates by inverting ``P(V > k) = G(k+1-a) / (G(k+1) G(1-a))``."""
    if alpha >= 1.0:
        return np.ones(n)
    target = np.log1p(-rng.uniform(size=n))  # log of survival level
    c = gammaln(1.0 - alpha)

    def log_surv(k):
        return gammaln(k + 1.0 - alpha) - gammaln(k + 1.0) - c

    lo = np.zeros(n)
    hi = np.ones(n)
    cap = 2.0 ** 60
    while True:
        need = (log_surv(hi) > target) & (hi < cap)
        if not need.any():
            break
        lo[need] = hi[need]
        hi[need] *= 2.0
    # smallest integer k with log_surv(k) <= target lies in (lo, hi]
    while np.any(hi - lo > 1.0):
        mid = np.floor((lo + hi) / 2.0)
        ok = log_surv(mid) <= target
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


def _conditional_2d(family: str, theta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.uniform(size=n)
    w = rng.uniform(size=n)
    if family == "clayton":
        v = ((w ** (-theta / (1.0 + theta)) - 1.0) * u ** (-theta) + 1.0) ** (-1.0 / theta)
    else:  # frank
        v = -np.log1p(w * np.expm1(-theta) / (w + (1.0 - w) * np.exp(-theta * u))) / theta
    return np.column_stack([u, v])


def sample_copula(family: str, params: Optional[Mapping] = None, dim: int = 2, n: int = 1000,
                  seed: int = 0) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from a ``dim``-variate copula.

    ``params`` keys by family: ``rho``/``tau``/``corr`` (gaussian, student_t, plus
    ``nu``), ``theta`` or ``tau`` (Archimedean), ``alpha``/``beta``
    (marshall_olkin), ``breaks`` (ordinal_sum_pi interval endpoints).
    """
    fam = _family(family)
    params = dict(params or {})
    dim, n = int(dim), int(n)
    if dim < 2:
        raise SpecError("copulas need dim >= 2")
    if n < 1:
        raise SpecError("n must be positive")
    rng = np.random.default_rng(derive_seed(seed, "copula", fam))

    if fam in ("gaussian", "student_t"):
        chol = _correlation(params, dim)
        z = rng.standard_normal((n, dim)) @ chol.T
        if fam == "gaussian":
            return stats.norm.cdf(z)
        nu = float(params.get("nu", 4.0))
        if nu <= 0:
            raise SpecError("student_t needs nu > 0")
        s = rng.chisquare(nu, size=n)
        x = z / np.sqrt(s / nu)[:, None]
        return stats.t.cdf(x, nu)

    if fam == "clayton":
        theta = _theta("clayton", params)
        if theta == 0.0:
            return rng.uniform(size=(n, dim))
        if theta < 0:
            if dim != 2 or theta < -1.0:
                raise SpecError("negative clayton parameters are only defined for dim 2, theta >= -1")
            return _conditional_2d("clayton", theta, n, rng)
        v = rng.gamma(1.0 / theta, size=n)
        return _archimedean(lambda t: (1.0 + t) ** (-1.0 / theta), v, rng, dim)

    if fam == "gumbel":
        theta = _theta("gumbel", params)
        if theta < 1.0:
            raise SpecError("gumbel needs theta >= 1")
        if theta == 1.0:
            return rng.uniform(size=(n, dim))
        alpha = 1.0 / theta
        v = _positive_stable(alpha, n, rng)
        return _archimedean(lambda t: np.exp(-t ** alpha), v, rng, dim)

    if fam == "frank":
        theta = _theta("frank", params)
        if theta == 0.0:
            return rng.uniform(size=(n, dim))
        if theta < 0:
            if dim != 2:
                raise SpecError("negative frank parameters are only defined for dim 2")
            return _conditional_2d("frank", theta, n, rng)
        p = min(-math.expm1(-theta), np.nextafter(1.0, 0.0))
        v = rng.logseries(p, size=n).astype(float)
        return _archimedean(lambda t: -np.log1p(-p * np.exp(-t)) / theta, v, rng, dim)

    if fam == "joe":
        theta = _theta("joe", params)
        if theta < 1.0:
            raise SpecError("joe needs theta >= 1")
        alpha = 1.0 / theta
        v = _sibuya(alpha, n, rng)
        return _archimedean(lambda t: 1.0 - (-np.expm1(-t)) ** alpha, v, rng, dim)

    if fam == "marshall_olkin":
        if dim != 2:
            raise SpecError("marshall_olkin is bivariate")
        a, b = float(params.get("alpha", 0.5)), float(params.get("beta", 0.5))
        if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
            raise SpecError("marshall_olkin needs alpha, beta in [0, 1]")
        if a == 0.0 or b == 0.0:
            return rng.uniform(size=(n, 2))
        # C(u, v) = min(u v^(1-alpha), u^(1-beta) v) via exponential shocks,
        # common shock at rate 1
        lam_x, lam_y = 1.0 / b - 1.0, 1.0 / a - 1.0
        z12 = rng.exponential(size=n)
        zx = rng.exponential(size=n) / lam_x if lam_x > 0 else np.full(n, np.inf)
        zy = rng.exponential(size=n) / lam_y if lam_y > 0 else np.full(n, np.inf)
        x = np.minimum(zx, z12)
        y = np.minimum(zy, z12)
        return np.column_stack([np.exp(-(lam_x + 1.0) * x), np.exp(-(lam_y + 1.0) * y)])

    u = rng.uniform(size=n)
    if fam == "M":
        return np.repeat(u[:, None], dim, axis=1)
    if dim != 2:
        raise SpecError(f"{fam} is bivariate")
    if fam == "W":
        return np.column_stack([u, 1.0 - u])
    if fam == "frechet_mix":
        flip = rng.uniform(size=n) < 0.5
        return np.column_stack([u, np.where(flip, 1.0 - u, u)])

    # ordinal sum of the independence copula
    breaks = params.get("breaks", params.get("intervals"))
    if breaks is None:
        raise SpecError("ordinal_sum_pi needs 'breaks'")
    pts = np.asarray(breaks, dtype=float).ravel()
    if pts.size < 2 or np.any(np.diff(pts) <= 0) or pts[0] < 0.0 or pts[-1] > 1.0:
        raise SpecError("ordinal_sum_pi breaks must be increasing within [0, 1]")
    v = u.copy()
    w = rng.uniform(size=n)
    for lo, hi in zip(pts[:-1], pts[1:]):
        inside = (u >= lo) & (u < hi)
        v[inside] = lo + (hi - lo) * w[inside]
    return np.column_stack([u, v])


# -- scenarios ----------------------------------------------------------------

@dataclass(frozen=True)
class CopulaBlock:
    labels: tuple[str, ...]
    family: str
    params: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class MarginalLaw:
    label: str
    law: str
    args: tuple[float, ...] = ()


@dataclass(frozen=True)
class Link:
    """``label = expr`` over earlier variables; ``normal(sd)`` and ``uniform(a, b)`` add noise."""

    label: str
    expr: str


Directive = CopulaBlock | MarginalLaw | Link


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    n: int
    seed: int
    blocks: tuple[Directive, ...]
    benchmark: Optional[tuple[tuple[str, ...], ...]] = None

    def labels(self) -> list[str]:
        out: list[str] = []
        for d in self.blocks:
            out.extend(d.labels if isinstance(d, CopulaBlock) else (d.label,))
        return out


_FUNCS = {
    "exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh, "arctan": np.arctan,
    "qnorm": stats.norm.ppf, "pnorm": stats.norm.cdf, "mod": np.mod,
}
_NOISE = ("normal", "uniform")
_CONSTANTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.divide, ast.Pow: np.power, ast.Mod: np.mod}


def _parse_expr(text: str) -> ast.Expression:
    try:
        return ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"cannot parse expression {text!r}: {exc.msg}") from None


def _references(tree: ast.Expression) -> set[str]:
    names = {node.id for node in ast.walk(tree) if isinstance(node, ast.Name)}
    return names - set(_FUNCS) - set(_NOISE) - set(_CONSTANTS)


class _Evaluator:
    def __init__(self, env: Mapping[str, np.ndarray], n: int, rng: np.random.Generator):
        self.env, self.n, self.rng = env, n, rng

    def __call__(self, node):
        if isinstance(node, ast.Expression):
            return self(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in self.env:
                return self.env[node.id]
            if node.id in _CONSTANTS:
                return _CONSTANTS[node.id]
            raise SpecError(f"undefined variable {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = self(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](self(node.left), self(node.right))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            args = [self(a) for a in node.args]
            name = node.func.id
            if name == "normal":
                sd = float(args[0]) if args else 1.0
                draws = self.rng.standard_normal(self.n)
                return draws * sd if sd != 0.0 else np.zeros(self.n)
            if name == "uniform":
                lo, hi = (float(args[0]), float(args[1])) if len(args) == 2 else (0.0, 1.0)
                return self.rng.uniform(lo, hi, size=self.n)
            if name in _FUNCS:
                return _FUNCS[name](*args)
        raise SpecError(f"unsupported expression element: {ast.dump(node)[:60]}")


def _sample_marginal(law: MarginalLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    name, args = law.law.lower(), law.args
    if name in ("normal", "gaussian"):
        mu, sd = (args + (0.0, 1.0)[len(args):])[:2]
        return mu + sd * rng.standard_normal(n)
    if name == "uniform":
        lo, hi = (args + (0.0, 1.0)[len(args):])[:2]
        return rng.uniform(lo, hi, size=n)
    if name in ("exponential", "exp"):
        scale = args[0] if args else 1.0
        return rng.exponential(scale, size=n)
    if name in ("t", "student_t"):
        return rng.standard_t(args[0] if args else 4.0, size=n)
    raise SpecError(f"unknown marginal law {law.law!r}")


def generate_scenario(spec: ScenarioSpec) -> tuple[SampleMatrix, Optional[Partition]]:
    """Realise a scenario; deterministic given ``spec.seed``."""
    if spec.n < 3:
        raise SpecError("scenarios need n >= 3")
    labels = spec.labels()
    if len(set(labels)) != len(labels):
        raise SpecError("a variable is defined twice")
    owner: dict[str, int] = {}
    deps: dict[int, set[int]] = {}
    trees: dict[int, ast.Expression] = {}
    for i, d in enumerate(spec.blocks):
        for lab in (d.labels if isinstance(d, CopulaBlock) else (d.label,)):
            owner[lab] = i
    for i, d in enumerate(spec.blocks):
        deps[i] = set()
        if isinstance(d, Link):
            trees[i] = _parse_expr(d.expr)
            for ref in _references(trees[i]):
                if ref not in owner:
                    raise SpecError(f"{d.label!r} refers to undefined variable {ref!r}")
                deps[i].add(owner[ref])
    try:
        order = list(graphlib.TopologicalSorter(deps).static_order())
    except graphlib.CycleError as exc:
        raise SpecError(f"scenario directives form a cycle: {exc.args[1]}") from None

    env: dict[str, np.ndarray] = {}
    for i in order:
        d = spec.blocks[i]
        if isinstance(d, CopulaBlock):
            u = sample_copula(d.family, d.params, len(d.labels), spec.n,
                              derive_seed(spec.seed, "block", d.labels))
            for j, lab in enumerate(d.labels):
                env[lab] = u[:, j]
        elif isinstance(d, MarginalLaw):
            env[d.label] = _sample_marginal(d, spec.n, rng_for(spec.seed, "marginal", d.label))
        else:
            val = _Evaluator(env, spec.n, rng_for(spec.seed, "link", d.label))(trees[i])
            env[d.label] = np.broadcast_to(np.asarray(val, dtype=float), (spec.n,)).copy()
    data = SampleMatrix(np.column_stack([env[lab] for lab in labels]), tuple(labels))
    bench = None
    if spec.benchmark is not None:
        bench = Partition.from_labels(spec.benchmark, data.labels)
    return data, bench


# -- built-in scenarios -------------------------------------------------------

BUILTIN_SCENARIOS = ("asym-mod-k", "w-vs-marshall-olkin", "mix-vs-ordinal", "linkage-sum",
                     "five-var", "noise", "four-groups", "three-copulas")

ORDINAL_BREAKS = (0.0, 0.3, 0.5, 0.75, 1.0)


def builtin_scenario(name: str, n: int = 1000, seed: int = 0, *, sigma: float = 0.0,
                     alpha: float = 1.0, k: int = 3) -> ScenarioSpec:
    """Named scenarios from the worked examples and simulation studies.

    ``sigma`` parameterises ``noise``, ``alpha`` parameterises ``four-groups``
    and ``k`` parameterises ``asym-mod-k``.
    """
    key = name.strip().lower()
    if key == "asym-mod-k":
        blocks = (MarginalLaw("X1", "uniform"), Link("X2", f"({int(k)} * X1) % 1"))
        return ScenarioSpec(f"asym-mod-{int(k)}", n, seed, blocks)
    if key == "w-vs-marshall-olkin":
        blocks = (CopulaBlock(("X1", "X2"), "W"),
                  CopulaBlock(("X3", "X4"), "marshall_olkin", {"alpha": 1.0, "beta": 0.5}))
        return ScenarioSpec(key, n, seed, blocks)
    if key == "mix-vs-ordinal":
        blocks = (CopulaBlock(("X1", "X2"), "frechet_mix"),
                  CopulaBlock(("X3", "X4"), "ordinal_sum_pi", {"breaks": ORDINAL_BREAKS}))
        return ScenarioSpec(key, n, seed, blocks)
    if key == "linkage-sum":
        blocks = (MarginalLaw("X1", "normal"), MarginalLaw("X2", "normal"), Link("X3", "X1 + X2"))
        return ScenarioSpec(key, n, seed, blocks)
    if key == "five-var":
        blocks = (
            CopulaBlock(("X1", "X2"), "student_t", {"rho": 0.0, "nu": 0.1}),
            Link("X3", "-exp(X2) + normal(0.2)"),
            # |.| guards the ~1e-7 chance that the noise flips the sign
            Link("X4", "log(abs(-X3)) + normal(1)"),
            Link("X5", "-sin(1.5 * X4 + 0.5 * X2)"),
        )
        return ScenarioSpec(key, n, seed, blocks, (("X1",), ("X2", "X3"), ("X4", "X5")))
    if key == "noise":
        s = float(sigma)
        if s < 0:
            raise SpecError("sigma must be non-negative")
        blocks = (
            MarginalLaw("X1", "normal"),
            Link("X2", f"X1 ** 2 + X1 + normal({s!r})"),
            MarginalLaw("X3", "normal"),
            Link("X4", f"exp(-X3) + normal({s!r})"),
            Link("X5", f"X4 + sin(X3) + normal({s!r})"),
            MarginalLaw("X6", "normal"),
        )
        return ScenarioSpec(f"noise({s:g})", n, seed, blocks,
                            (("X1", "X2"), ("X3", "X4", "X5"), ("X6",)))
    if key == "four-groups":
        a = float(alpha)
        groups = []
        for letter, base in zip("ABCD", (0.2, 0.4, 0.6, 0.8)):
            labs = tuple(f"{letter}{i}" for i in range(1, 6))
            groups.append(CopulaBlock(labs, "clayton", {"tau": a * base}))
        return ScenarioSpec(f"four-groups({a:g})", n, seed, tuple(groups),
                            tuple(g.labels for g in groups))
    if key == "three-copulas":
        groups = (
            CopulaBlock(("N1", "N2", "N3"), "gaussian", {"tau": 0.15}),
            CopulaBlock(("C1", "C2", "C3"), "clayton", {"tau": 0.30}),
            CopulaBlock(("G1", "G2", "G3"), "gumbel", {"tau": 0.45}),
        )
        return ScenarioSpec(key, n, seed, groups, tuple(g.labels for g in groups))
    raise SpecError(f"unknown scenario {name!r}; built-ins: {', '.join(BUILTIN_SCENARIOS)}")


# -- text config ----------------------------------------------------------------

def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"expected a number, got {text!r}") from None


def _param_value(text: str):
    if "," in text:
        return tuple(_number(t) for t in text.split(",") if t)
    return _number(text)


def parse_scenario(text: str, *, n: Optional[int] = None, seed: Optional[int] = None) -> ScenarioSpec:
    """Parse the line-oriented scenario format.

    ::

        name   my-study
        n      1000
        seed   7
        copula X1,X2 student_t rho=0 nu=0.1
        marginal Z normal 0 1
        link   X3 = -exp(X2) + normal(0.2)
        benchmark X1 | X2,X3 | Z
    """
    name, n_val, seed_val = "custom", 1000, 0
    blocks: list[Directive] = []
    bench = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        head, rest = head.lower(), rest.strip()
        try:
            if head == "name":
                name = rest
            elif head == "n":
                n_val = int(rest)
            elif head == "seed":
                seed_val = int(rest)
            elif head == "copula":
                fields = rest.split()
                if len(fields) < 2:
                    raise SpecError("copula needs labels and a family")
                labs = tuple(x for x in fields[0].split(",") if x)
                params = {}
                for kv in fields[2:]:
                    key, eq, val = kv.partition("=")
                    if not eq:
                        raise SpecError(f"expected key=value, got {kv!r}")
                    params[key] = _param_value(val)
                blocks.append(CopulaBlock(labs, _family(fields[1]), params))
            elif head == "marginal":
                fields = rest.split()
                if len(fields) < 2:
                    raise SpecError("marginal needs a label and a law")
                blocks.append(MarginalLaw(fields[0], fields[1],
                                          tuple(_number(x) for x in fields[2:])))
            elif head == "link":
                label, eq, expr = rest.partition("=")
                if not eq or not label.strip() or not expr.strip():
                    raise SpecError("link needs 'label = expression'")
                blocks.append(Link(label.strip(), expr.strip()))
            elif head == "benchmark":
                bench = tuple(tuple(x.strip() for x in part.split(",") if x.strip())
                              for part in rest.split("|"))
            else:
                raise SpecError(f"unknown directive {head!r}")
        except (SpecError, ValueError) as exc:
            raise SpecError(f"line {lineno}: {exc}") from None
    if not blocks:
        raise SpecError("scenario defines no variables")
    return ScenarioSpec(name, n if n is not None else n_val,
                        seed if seed is not None else seed_val, tuple(blocks), bench)


def load_scenario(source: str, *, n: Optional[int] = None, seed: Optional[int] = None,
                  sigma: float = 0.0, alpha: float = 1.0, k: int = 3) -> ScenarioSpec:
    """Resolve a built-in name or a path to a scenario config file."""
    path = Path(source)
    if path.is_file():
        return parse_scenario(path.read_text(encoding="utf-8"), n=n, seed=seed)
    return builtin_scenario(source, n=n if n is not None else 1000,
                            seed=seed if seed is not None else 0,
                            sigma=sigma, alpha=alpha, k=k)
