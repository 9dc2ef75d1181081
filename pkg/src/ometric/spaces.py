"""O-metric spaces: intervals, ω operations, the built-in catalog and axiom checks."""

from __future__ import annotations

import bisect
import enum
import itertools
import math
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

from ._backend import KIND_AFFINE, KIND_MAX, KIND_POWPROD
from .errors import (
    ConstructionError,
    DomainError,
    NotMetrizableError,
    OMetricError,
    OrientationError,
    ParameterError,
)
from .expr import ExpressionError, compile_expr
from .tolerance import Tolerance

inf = math.inf


class Flag(enum.Enum):
    TRUE = "declared-true"
    FALSE = "declared-false"
    UNKNOWN = "unknown"


class Orientation(enum.Enum):
    UPWARD = "upward"
    DOWNWARD = "downward"
    NEITHER = "neither"
    UNKNOWN = "unknown"


# --------------------------------------------------------------------------
# Intervals


@dataclass(frozen=True)
class Interval:
    """An interval ``I_a`` of non-negative reals containing the base value ``a``."""

    lower: float
    upper: float = inf
    lower_closed: bool = True
    upper_closed: bool = False
    base: float = 0.0

    def __post_init__(self):
        if math.isinf(self.upper) and self.upper_closed:
            object.__setattr__(self, "upper_closed", False)
        if not self.lower >= 0:
            raise ParameterError(f"interval lower bound must be >= 0, got {self.lower}")
        if self.lower > self.upper:
            raise ParameterError(f"empty interval [{self.lower}, {self.upper}]")
        if not self.contains(self.base):
            raise ParameterError(f"base {self.base} is not inside {self.describe()}")

    def contains(self, x: float, slack: float = 0.0) -> bool:
        if x != x:
            return False
        lo_ok = x >= self.lower - slack if self.lower_closed else x > self.lower - slack
        hi_ok = x <= self.upper + slack if self.upper_closed else x < self.upper + slack
        return lo_ok and hi_ok

    def describe(self) -> str:
        lo = "[" if self.lower_closed else "("
        hi = "]" if self.upper_closed else ")"
        return f"{lo}{_fmt(self.lower)}, {_fmt(self.upper)}{hi}"

    def grid(self, k: int = 9) -> list[float]:
        """Deterministic sample of ``k`` points in the interval, always including the base."""
        if math.isinf(self.upper):
            offsets = [0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
            pts = [self.lower + o for o in offsets[:k]]
        else:
            width = self.upper - self.lower
            pts = [self.lower + width * j / (k - 1) for j in range(k)] if k > 1 else [self.lower]
        eps = 1e-9 * max(1.0, abs(self.upper) if math.isfinite(self.upper) else 1.0)
        pts = [p for p in pts if self.contains(p)] + [self.base]
        if not self.lower_closed:
            pts.append(self.lower + max(eps, 1e-6))
        if math.isfinite(self.upper) and not self.upper_closed:
            pts.append(self.upper - max(eps, 1e-6))
        return sorted(set(p for p in pts if self.contains(p)))

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_closed": self.lower_closed,
            "upper_closed": self.upper_closed,
            "base": self.base,
        }


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x)).rstrip("0").rstrip(".") if x != int(x) else str(int(x))


# --------------------------------------------------------------------------
# ω operations


@dataclass(frozen=True, eq=False)
class OmegaOp:
    """Binary operation ``ω : I_a × I_a → R_+`` with declared structural flags.

    ``kernel`` names a compiled fast path ``(kind, p, q)``; when it is set the
    operation must agree with ``func`` exactly.
    """

    func: Callable[[float, float], float]
    name: str = "omega"
    symmetric: Flag = Flag.UNKNOWN
    nondecreasing: Flag = Flag.UNKNOWN
    continuous_at_base: Flag = Flag.UNKNOWN
    associative: Flag = Flag.UNKNOWN
    base_idempotent: Flag = Flag.UNKNOWN
    kernel: tuple | None = None

    def __call__(self, u: float, v: float) -> float:
        return float(self.func(u, v))

    def flags(self) -> dict[str, Flag]:
        return {
            "symmetric": self.symmetric,
            "nondecreasing_each_var": self.nondecreasing,
            "continuous_at_base_pair": self.continuous_at_base,
            "associative": self.associative,
            "base_idempotent": self.base_idempotent,
        }


_T, _F, _U = Flag.TRUE, Flag.FALSE, Flag.UNKNOWN


def omega_affine(p: float, q: float) -> OmegaOp:
    """ω(u, v) = p·u + q·v."""
    p, q = float(p), float(q)
    sym = _T if p == q else _F
    assoc = _T if p == q == 1.0 else (_F if p > 0 and q > 0 else _U)
    mono = _T if p >= 0 and q >= 0 else _F
    name = "u+v" if p == q == 1.0 else (f"{_fmt(p)}*(u+v)" if p == q else f"{_fmt(p)}*u+{_fmt(q)}*v")
    return OmegaOp(
        lambda u, v: p * u + q * v, name, sym, mono, _T, assoc, _T,
        kernel=(KIND_AFFINE, p, q),
    )


def omega_sum() -> OmegaOp:
    return omega_affine(1.0, 1.0)


def omega_scaled_sum(s: float) -> OmegaOp:
    """The b-metric operation ω(u, v) = s(u + v)."""
    return omega_affine(s, s)


def omega_max() -> OmegaOp:
    return OmegaOp(lambda u, v: u if u >= v else v, "max", _T, _T, _T, _T, _T, kernel=(KIND_MAX, 0.0, 0.0))


def omega_pow_product(s: float = 1.0) -> OmegaOp:
    """ω(u, v) = (u·v)^s; ``s = 1`` is the multiplicative-metric operation."""
    s = float(s)

    def f(u, v):
        try:
            return (u * v) ** s
        except OverflowError:
            return inf

    assoc = _T if s == 1.0 else _F
    name = "u*v" if s == 1.0 else f"(u*v)^{_fmt(s)}"
    return OmegaOp(f, name, _T, _T, _T, assoc, _T, kernel=(KIND_POWPROD, s, 0.0))


def omega_product() -> OmegaOp:
    return omega_pow_product(1.0)


def omega_from_expr(source: str, **flags: Flag) -> OmegaOp:
    """Compile an expression in ``u`` and ``v``; flags default to unknown."""
    fn = compile_expr(source, ("u", "v"))
    return OmegaOp(fn, source, **flags)


BUILTIN_OMEGAS: dict[str, Callable[..., OmegaOp]] = {
    "sum": omega_sum,
    "scaled_sum": omega_scaled_sum,
    "affine": omega_affine,
    "max": omega_max,
    "product": omega_product,
    "pow_product": omega_pow_product,
}


def parse_omega(spec: str) -> OmegaOp:
    """Resolve ``"sum"``, ``"max"``, ``"product"``, ``"scaled_sum:2"``,
    ``"affine:1,2"``, ``"pow_product:2"`` or an expression in ``u, v``.

    Expressions that spell a built-in (``u+v``, ``2*(u+v)``, ``u+2*v``, ``u*v``,
    ``max(u,v)``) resolve to it, which keeps the compiled fast path.
    """
    text = spec.strip()
    head, _, args = text.partition(":")
    if head in BUILTIN_OMEGAS and (args or head in ("sum", "max", "product")):
        vals = [float(a) for a in args.split(",") if a.strip()]
        return BUILTIN_OMEGAS[head](*vals)
    canon = text.replace(" ", "")
    if canon in ("u+v", "v+u"):
        return omega_sum()
    if canon in ("u*v", "v*u"):
        return omega_product()
    if canon in ("max(u,v)", "max(v,u)"):
        return omega_max()
    import re

    m = re.fullmatch(r"(\d+(?:\.\d*)?)\*\(u\+v\)", canon)
    if m:
        return omega_scaled_sum(float(m.group(1)))
    m = re.fullmatch(r"(?:(\d+(?:\.\d*)?)\*)?u\+(?:(\d+(?:\.\d*)?)\*)?v", canon)
    if m:
        return omega_affine(float(m.group(1) or 1), float(m.group(2) or 1))
    return omega_from_expr(text)


# --------------------------------------------------------------------------
# Point domains


@dataclass(frozen=True)
class RealDomain:
    """A real interval of points.  ``draw`` bounds the uniform sampler when the
    interval itself is unbounded."""

    lower: float = -inf
    upper: float = inf
    lower_closed: bool = True
    upper_closed: bool = True
    draw: tuple[float, float] = (-10.0, 10.0)

    def contains(self, x) -> bool:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            return False
        if x != x:
            return False
        lo_ok = x >= self.lower if self.lower_closed else x > self.lower
        hi_ok = x <= self.upper if self.upper_closed else x < self.upper
        return lo_ok and hi_ok

    def resolve(self, x):
        if not self.contains(x):
            raise DomainError(f"point {x!r} is outside {self.describe()}")
        return float(x)

    def sample(self, rng: random.Random, k: int) -> list[float]:
        lo = max(self.lower, self.draw[0])
        hi = min(self.upper, self.draw[1])
        out = []
        while len(out) < k:
            x = rng.uniform(lo, hi)
            if self.contains(x):
                out.append(x)
        return out

    def describe(self) -> str:
        lo = "[" if self.lower_closed and math.isfinite(self.lower) else "("
        hi = "]" if self.upper_closed and math.isfinite(self.upper) else ")"
        return f"reals {lo}{_fmt(self.lower)}, {_fmt(self.upper)}{hi}"


@dataclass(frozen=True)
class FiniteDomain:
    """A finite set of labelled points.  Numeric labels also resolve from nearby
    floats (relative 1e-12), so ``1/(2*n)`` computed at run time finds its point."""

    points: tuple
    _numeric: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.points:
            raise ParameterError("finite domain needs at least one point")
        nums = sorted(p for p in self.points if isinstance(p, (int, float)) and not isinstance(p, bool))
        object.__setattr__(self, "_numeric", tuple(nums))

    def _lookup(self, x):
        if x in self.points:
            return x
        if isinstance(x, (int, float)) and not isinstance(x, bool) and self._numeric:
            j = bisect.bisect_left(self._numeric, x)
            for cand in self._numeric[max(0, j - 1): j + 1]:
                if abs(cand - x) <= 1e-12 * max(1.0, abs(x)):
                    return cand
        return None

    def contains(self, x) -> bool:
        return self._lookup(x) is not None

    def resolve(self, x):
        hit = self._lookup(x)
        if hit is None:
            raise DomainError(f"point {x!r} is not in the finite domain")
        return hit

    def sample(self, rng: random.Random, k: int) -> list:
        return [rng.choice(self.points) for _ in range(k)]

    def describe(self) -> str:
        if len(self.points) <= 6:
            return "finite set {" + ", ".join(map(str, self.points)) + "}"
        return f"finite set of {len(self.points)} points"


# --------------------------------------------------------------------------
# O-metric spaces


@dataclass(frozen=True, eq=False)
class OMetricSpace:
    name: str
    domain: RealDomain | FiniteDomain
    dist: Callable[[Any, Any], float]
    omega: OmegaOp
    interval: Interval
    orientation: Orientation = Orientation.UNKNOWN
    params: Mapping[str, Any] = field(default_factory=dict)
    omega_verified: bool = True
    description: str = ""

    @property
    def base(self) -> float:
        return self.interval.base

    def d(self, x, y) -> float:
        """Distance after domain validation of both points."""
        return float(self.dist(self.domain.resolve(x), self.domain.resolve(y)))

    def sample_points(self, k: int, seed: int = 0) -> list:
        return self.domain.sample(random.Random(seed), k)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "params": dict(self.params),
            "domain": self.domain.describe(),
            "interval": self.interval.describe(),
            "base": self.base,
            "omega": self.omega.name,
            "orientation": self.orientation.value,
            "omega_verified": self.omega_verified,
        }


# --------------------------------------------------------------------------
# Catalog


def _require_s(params, minimum=1.0):
    if "s" not in params:
        raise ParameterError("parameter 's' is required")
    s = float(params["s"])
    if not s >= minimum:
        raise ParameterError(f"s must be >= {minimum:g}, got {s:g}")
    return s


def _power_for(s: float) -> float:
    # |x-y|^p is a b-metric with constant 2^(p-1)
    return 1.0 + math.log2(s)


def _metric(params):
    return OMetricSpace(
        "metric", RealDomain(), lambda x, y: abs(x - y), omega_sum(),
        Interval(0.0, inf, True, False, 0.0), Orientation.UPWARD, dict(params),
        description="reals with |x - y|",
    )


def _example_21_points(size: int) -> tuple:
    return (0.0,) + tuple(1.0 / k for k in range(1, size + 1))


def _example_21_dist(x, y):
    if x == y:
        return 0.0
    if {x, y} == {0.0, 1.0}:
        return 1.0
    if _even_reciprocal(x) and _even_reciprocal(y):
        return abs(x - y)
    return 4.0


def _even_reciprocal(x: float) -> bool:
    if x == 0.0:
        return True
    k = round(1.0 / x)
    return k % 2 == 0 and abs(1.0 / k - x) <= 1e-12 * x


def _b_metric(params):
    s = _require_s(params)
    carrier = params.get("carrier", "reals")
    if carrier == "reals":
        p = _power_for(s)
        dist = (lambda x, y: abs(x - y)) if p == 1.0 else (lambda x, y: abs(x - y) ** p)
        domain = RealDomain(draw=(-5.0, 5.0))
        desc = f"reals with |x - y|^{_fmt(p)}"
    elif carrier == "example_2_1":
        if s < 4:
            raise ParameterError("the example_2_1 carrier is a b-metric only for s >= 4")
        size = int(params.get("size", 20000))
        domain = FiniteDomain(_example_21_points(size))
        dist = _example_21_dist
        desc = "{0} ∪ {1/k}: |x-y| on {0} ∪ {1/2k}, 1 on {0,1}, 4 otherwise"
    else:
        raise ParameterError(f"unknown b_metric carrier {carrier!r}")
    return OMetricSpace(
        "b_metric", domain, dist, omega_scaled_sum(s), Interval(0.0, inf, True, False, 0.0),
        Orientation.UPWARD, dict(params), description=desc,
    )


def _exp_or_inf(x):
    try:
        return math.exp(x)
    except OverflowError:
        return inf


def _multiplicative(params):
    return OMetricSpace(
        "multiplicative", RealDomain(draw=(-3.0, 3.0)), lambda x, y: _exp_or_inf(abs(x - y)),
        omega_product(), Interval(1.0, inf, True, False, 1.0), Orientation.UPWARD, dict(params),
        description="reals with exp|x - y|",
    )


def _b_multiplicative(params):
    s = _require_s(params)
    p = _power_for(s)
    return OMetricSpace(
        "b_multiplicative", RealDomain(draw=(-1.5, 1.5)),
        lambda x, y: _exp_or_inf(abs(x - y) ** p), omega_pow_product(s),
        Interval(1.0, inf, True, False, 1.0), Orientation.UPWARD, dict(params),
        description=f"reals with exp(|x - y|^{_fmt(p)})",
    )


def _ultra(params):
    return OMetricSpace(
        "ultra", RealDomain(), lambda x, y: 0.0 if x == y else max(abs(x), abs(y)), omega_max(),
        Interval(0.0, inf, True, False, 0.0), Orientation.UPWARD, dict(params),
        description="reals with max(|x|, |y|) for x != y",
    )


def _p_metric(params):
    source = params.get("Omega", params.get("omega_fn", "t+t^2"))
    try:
        big = compile_expr(source, ("t",))
    except ExpressionError as exc:
        raise ParameterError(f"Omega: {exc}") from None
    grid = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0]
    vals = [big(t) for t in grid]
    if any(v < t for v, t in zip(vals, grid)):
        raise ParameterError("Omega must satisfy t <= Omega(t)")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ParameterError("Omega must be strictly increasing")
    op = OmegaOp(lambda u, v: big(u + v), f"Omega(u+v), Omega(t)={source}", _T, _T, _T, _U, _U)
    if big(0.0) == 0.0:
        op = replace(op, base_idempotent=_T)
    return OMetricSpace(
        "p_metric", RealDomain(), lambda x, y: abs(x - y), op,
        Interval(0.0, inf, True, False, 0.0), Orientation.UPWARD, dict(params),
        description="reals with |x - y|",
    )


def _log_metric(params):
    op = OmegaOp(lambda u, v: (u + 1.0) * (v + 1.0), "(u+1)*(v+1)", _T, _T, _T, _F, _F)
    return OMetricSpace(
        "log_metric", RealDomain(), lambda x, y: math.log1p(abs(x - y)), op,
        Interval(0.0, inf, True, False, 0.0), Orientation.UPWARD, dict(params),
        description="reals with ln(1 + |x - y|)",
    )


def _love_downward(params):
    radius = int(params.get("radius", 50))
    op = OmegaOp(lambda u, v: u / v, "u/v", _F, _F, _T, _F, _T)
    return OMetricSpace(
        "love_downward", FiniteDomain(tuple(range(-radius, radius + 1))),
        lambda i, j: math.exp(-abs(i - j)), op, Interval(0.0, 1.0, False, True, 1.0),
        Orientation.DOWNWARD, dict(params), description="p_i, p_j with exp(-|i - j|)",
    )


def _exotic_omega(u, v):
    if u <= 1.0 and v <= 1.0:
        return max(u / v, -math.log(u * v))
    if u <= 1.0 < v:
        return max(u * _exp_or_inf(v), -math.log(u) + v)
    if v <= 1.0 < u:
        return max(_exp_or_inf(-u) / v, u - math.log(v))
    return max(_exp_or_inf(v - u), u + v)


def _piecewise_exotic(params):
    op = OmegaOp(_exotic_omega, "piecewise", _F, _U, _U, _F, _T)

    def dist(x, y):
        g = abs(x - y)
        return math.exp(-g) if g <= 1.0 else g

    return OMetricSpace(
        "piecewise_exotic", RealDomain(draw=(-3.0, 3.0)), dist, op,
        Interval(0.0, inf, False, False, 1.0), Orientation.NEITHER, dict(params),
        description="exp(-|x-y|) when |x-y| <= 1, else |x-y|",
    )


def _olala(params):
    op = OmegaOp(lambda u, v: 1.0 / (u * v) if u != 0 and v != 0 else 1.0, "1/(uv)", _T, _F, _T, _F, _T)
    return OMetricSpace(
        "olala", RealDomain(-1.0, 1.0, draw=(-1.0, 1.0)),
        lambda x, y: 1.0 if x == y else abs(x * y), op, Interval(0.0, 1.0, True, True, 1.0),
        Orientation.DOWNWARD, dict(params), description="[-1, 1] with |xy| for x != y",
    )


def _aims_omega(u, v):
    return 2.0 * u / v if u * v != 0 else u + v


def _aims(params):
    op = OmegaOp(_aims_omega, "2u/v (uv != 0), u+v otherwise", _F, _F, _F, _F, _T)
    return OMetricSpace(
        "aims", RealDomain(0.0, inf, False, True, draw=(0.01, 10.0)),
        lambda x, y: 0.0 if x == y else 2.0 * x * y / (x * x + y * y), op,
        Interval(0.0, 1.0, True, False, 0.0), Orientation.UPWARD, dict(params),
        description="positive reals with 2xy/(x^2 + y^2)",
    )


CATALOG: dict[str, Callable[[Mapping[str, Any]], OMetricSpace]] = {
    "metric": _metric,
    "b_metric": _b_metric,
    "multiplicative": _multiplicative,
    "b_multiplicative": _b_multiplicative,
    "ultra": _ultra,
    "p_metric": _p_metric,
    "log_metric": _log_metric,
    "love_downward": _love_downward,
    "piecewise_exotic": _piecewise_exotic,
    "olala": _olala,
    "aims": _aims,
}


def make_builtin(name: str, params: Mapping[str, Any] | None = None, **kwargs) -> OMetricSpace:
    """Build a catalog space.  Parameters may come as a mapping, keywords, or both."""
    merged = dict(params or {})
    merged.update(kwargs)
    try:
        builder = CATALOG[name]
    except KeyError:
        raise ParameterError(f"unknown space {name!r}; known: {', '.join(CATALOG)}") from None
    return builder(merged)


# --------------------------------------------------------------------------
# Axiom verification


@dataclass
class AxiomResult:
    name: str
    passed: bool
    checked: int = 0
    witness: Any = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "witness": _jsonable(self.witness),
            "detail": self.detail,
        }


@dataclass
class AxiomReport:
    space: str
    samples: tuple
    sample_description: str
    tol: Tolerance
    containment: AxiomResult
    identity: AxiomResult
    symmetry: AxiomResult
    triangle: AxiomResult
    omega_flags: dict[str, AxiomResult] = field(default_factory=dict)

    @property
    def axioms_passed(self) -> bool:
        return all(r.passed for r in (self.containment, self.identity, self.symmetry, self.triangle))

    @property
    def passed(self) -> bool:
        return self.axioms_passed and all(r.passed for r in self.omega_flags.values())

    def failures(self) -> list[AxiomResult]:
        rs = [self.containment, self.identity, self.symmetry, self.triangle, *self.omega_flags.values()]
        return [r for r in rs if not r.passed]

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "passed": self.passed,
            "samples": _jsonable(list(self.samples)),
            "sample_description": self.sample_description,
            "tol": {"rel": self.tol.rel, "abs": self.tol.abs},
            "axioms": {
                r.name: r.to_dict() for r in (self.containment, self.identity, self.symmetry, self.triangle)
            },
            "omega_flags": {k: r.to_dict() for k, r in self.omega_flags.items()},
        }


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    return x


def _safe(fn, *args):
    try:
        v = float(fn(*args))
    except (ArithmeticError, ValueError, ExpressionError) as exc:
        return None, str(exc)
    return v, ""


def verify_axioms(
    space: OMetricSpace,
    samples: Sequence | None = None,
    tol=None,
    n_samples: int = 12,
    seed: int = 0,
) -> AxiomReport:
    """Sampled check of self-distance, symmetry, the triangle ω-inequality and
    containment of every distance in ``I_a``.  Failures carry the first witness."""
    tol = Tolerance.coerce(tol)
    if samples is None:
        pts = space.sample_points(n_samples, seed)
        desc = f"{n_samples} uniform draws from {space.domain.describe()} (seed {seed})"
    else:
        pts = list(samples)
        if not pts:
            raise ParameterError("samples must be nonempty")
        desc = f"{len(pts)} supplied points"
    a = space.base
    iv = space.interval

    resolved = []
    containment = AxiomResult("containment", True)
    for x in pts:
        if not space.domain.contains(x):
            containment = AxiomResult("containment", False, witness=[x], detail="point outside domain")
            break
        resolved.append(space.domain.resolve(x))
    k = len(resolved)
    table: dict[tuple[int, int], float | None] = {}
    for i, j in itertools.product(range(k), repeat=2):
        v, err = _safe(space.dist, resolved[i], resolved[j])
        table[i, j] = v
        containment.checked += 1
        if containment.passed and (v is None or not iv.contains(v, tol.slack(v) if v is not None else 0.0)):
            containment.passed = False
            containment.witness = [resolved[i], resolved[j], v]
            containment.detail = err or f"distance outside I_a = {iv.describe()}"

    identity = AxiomResult("identity", True)
    symmetry = AxiomResult("symmetry", True)
    for i, j in itertools.product(range(k), repeat=2):
        v = table[i, j]
        if v is None:
            continue
        same = resolved[i] == resolved[j]
        identity.checked += 1
        if identity.passed:
            if same and not tol.close(v, a):
                identity.passed, identity.witness = False, [resolved[i], resolved[j], v]
                identity.detail = f"self-distance differs from base {a}"
            elif not same and tol.close(v, a):
                identity.passed, identity.witness = False, [resolved[i], resolved[j], v]
                identity.detail = f"distinct points at base distance {a}"
        w = table[j, i]
        if i < j and w is not None:
            symmetry.checked += 1
            if symmetry.passed and not tol.close(v, w):
                symmetry.passed, symmetry.witness = False, [resolved[i], resolved[j], v, w]
                symmetry.detail = "d(x,y) != d(y,x)"

    triangle = AxiomResult("triangle", True)
    for i, j, m in itertools.product(range(k), repeat=3):
        lhs, d1, d2 = table[i, m], table[i, j], table[j, m]
        if lhs is None or d1 is None or d2 is None:
            continue
        rhs, err = _safe(space.omega, d1, d2)
        triangle.checked += 1
        if rhs is None or not tol.le(lhs, rhs):
            triangle.passed = False
            triangle.witness = [resolved[i], resolved[j], resolved[m], lhs, rhs]
            triangle.detail = err or "d(x,z) > ω(d(x,y), d(y,z))"
            break

    values = sorted({v for v in table.values() if v is not None and iv.contains(v)} | {a})
    flags = check_omega_flags(space.omega, iv, values, tol)
    return AxiomReport(space.name, tuple(resolved), desc, tol, containment, identity, symmetry, triangle, flags)


def _thin(values: Sequence[float], k: int) -> list[float]:
    values = sorted(values)
    if len(values) <= k:
        return list(values)
    step = (len(values) - 1) / (k - 1)
    return sorted({values[round(j * step)] for j in range(k)})


def check_omega_flags(omega: OmegaOp, interval: Interval, values: Sequence[float], tol=None) -> dict[str, AxiomResult]:
    """Spot-check every flag declared true on the given values of ``I_a``."""
    tol = Tolerance.coerce(tol)
    vals = _thin([v for v in values if interval.contains(v)], 10)
    a = interval.base
    out: dict[str, AxiomResult] = {}

    def ev(u, v):
        return _safe(omega, u, v)[0]

    if omega.symmetric is Flag.TRUE:
        r = AxiomResult("symmetric", True)
        for u, v in itertools.combinations(vals, 2):
            x, y = ev(u, v), ev(v, u)
            r.checked += 1
            if x is None or y is None or not tol.close(x, y):
                r.passed, r.witness = False, [u, v, x, y]
                break
        out["symmetric"] = r
    if omega.nondecreasing is Flag.TRUE:
        r = AxiomResult("nondecreasing_each_var", True)
        for (u1, u2), v in itertools.product(itertools.combinations(vals, 2), vals):
            r.checked += 1
            x1, x2, y1, y2 = ev(u1, v), ev(u2, v), ev(v, u1), ev(v, u2)
            if None in (x1, x2, y1, y2) or not (tol.le(x1, x2) and tol.le(y1, y2)):
                r.passed, r.witness = False, [u1, u2, v]
                break
        out["nondecreasing_each_var"] = r
    if omega.associative is Flag.TRUE:
        r = AxiomResult("associative", True)
        small = _thin(vals, 6)
        for u, v, w in itertools.product(small, repeat=3):
            r.checked += 1
            uv, vw = ev(u, v), ev(v, w)
            lhs = ev(uv, w) if uv is not None else None
            rhs = ev(u, vw) if vw is not None else None
            if lhs is None or rhs is None or not tol.close(lhs, rhs):
                r.passed, r.witness = False, [u, v, w, lhs, rhs]
                break
        out["associative"] = r
    if omega.base_idempotent is Flag.TRUE:
        x = ev(a, a)
        out["base_idempotent"] = AxiomResult(
            "base_idempotent", x is not None and tol.close(x, a), 1, [a, x]
        )
    if omega.continuous_at_base is Flag.TRUE:
        r = continuity_probe(omega, interval)
        out["continuous_at_base_pair"] = r
    return out


def continuity_probe(omega: OmegaOp, interval: Interval, threshold: float = 1e-6) -> AxiomResult:
    """Probe ω near ``(a, a)`` on radii ``10^-j``, ``j = 1..8``.

    Passes when the deviation from ``ω(a, a)`` at the finest radius is below
    ``threshold`` and no larger than at the coarsest radius.
    """
    a = interval.base
    center = _safe(omega, a, a)[0]
    devs = []
    worst = None
    for j in range(1, 9):
        delta = 10.0 ** (-j)
        dev_j = 0.0
        for du, dv in ((delta, delta), (delta, 0.0), (0.0, delta), (-delta, -delta), (-delta, 0.0), (0.0, -delta)):
            u, v = a + du, a + dv
            if not (interval.contains(u) and interval.contains(v)):
                continue
            x = _safe(omega, u, v)[0]
            dev = inf if x is None or center is None else abs(x - center)
            if dev > dev_j:
                dev_j = dev
                if worst is None or dev > worst[2]:
                    worst = [u, v, dev]
        devs.append(dev_j)
    ok = center is not None and devs[-1] <= threshold and devs[-1] <= devs[0]
    return AxiomResult(
        "continuous_at_base_pair", ok, len(devs), worst,
        "deviations by radius: " + ", ".join(f"{d:.3g}" for d in devs),
    )


# --------------------------------------------------------------------------
# Upwardization and metrization


def _upward_interval(iv: Interval) -> Interval:
    a = iv.base
    up = iv.upper - a
    down = a - iv.lower
    if up > down:
        hi, closed = iv.upper, iv.upper_closed
    elif down > up:
        hi, closed = 2 * a - iv.lower, iv.lower_closed
    else:
        hi, closed = iv.upper, iv.upper_closed or iv.lower_closed
    return Interval(a, hi, True, closed, a)


def upwardize(
    space: OMetricSpace,
    replacement: OmegaOp | None = None,
    samples: Sequence[float] | None = None,
) -> OMetricSpace:
    """Return the upward O-metric ``a + |d - a|`` with the same open balls.

    The new operation is, in order of preference: the original ω when the
    space is already upward; the reflected maximum
    ``max{ω(u,v), ω(u,2a-v), ω(2a-u,v), ω(2a-u,2a-v), 2a}`` when every
    reflected argument stays in ``I_a``; the caller's ``replacement``; else
    the same maximum restricted to the arguments that lie in ``I_a``, with
    ``omega_verified`` cleared.
    """
    a = space.base
    iv = space.interval
    dist = space.dist

    def d_up(x, y):
        return a + abs(dist(x, y) - a)

    if space.orientation is Orientation.UPWARD:
        return replace(space, name=f"upward({space.name})", dist=d_up)

    new_iv = _upward_interval(iv)
    grid = list(samples) if samples is not None else new_iv.grid(33)
    grid = [u for u in grid if new_iv.contains(u)]
    reflect_ok = all(iv.contains(u) and iv.contains(2 * a - u) for u in grid)

    if reflect_ok:
        omega = _reflected_max(space.omega, iv, a, masked=False)
        verified = True
    elif replacement is not None:
        omega, verified = replacement, False
    else:
        omega = _reflected_max(space.omega, iv, a, masked=True)
        verified = False
    if replacement is None or reflect_ok:
        # the reflected max is at least 2a, which a bounded I_a may not hold
        escaped = False
        for u in grid:
            for v in grid:
                try:
                    w = float(omega(u, v))
                except (ArithmeticError, ValueError, OMetricError) as exc:
                    raise ConstructionError(f"upward operation fails at ({u}, {v}): {exc}") from exc
                if math.isnan(w):
                    raise ConstructionError(f"upward operation is undefined at ({u}, {v})")
                if not new_iv.contains(w):
                    escaped = True
        if escaped:
            new_iv = Interval(a, math.inf, True, False, a)
            verified = False
    return OMetricSpace(
        f"upward({space.name})", space.domain, d_up, omega, new_iv, Orientation.UPWARD,
        dict(space.params), verified, f"upwardized {space.description}".strip(),
    )


def _reflected_max(omega: OmegaOp, iv: Interval, a: float, masked: bool) -> OmegaOp:
    def xi(u, v):
        best = 2 * a
        for p in (u, 2 * a - u):
            if masked and not iv.contains(p):
                continue
            for q in (v, 2 * a - v):
                if masked and not iv.contains(q):
                    continue
                x = omega(p, q)
                if x != x:
                    return x
                if x > best:
                    best = x
        return best

    return OmegaOp(xi, f"xi[{omega.name}]", omega.symmetric)


def metrize(
    space: OMetricSpace,
    lam: Callable[[float], float],
    lam_inverse: Callable[[float], float],
    grid: Sequence[float] | None = None,
    tol=None,
) -> OMetricSpace:
    """Return the metric space ``(X, λ∘d)`` after sampled checks that λ is
    increasing with λ(a) = 0 and that λ(ω(u, v)) = λ(u) + λ(v)."""
    tol = Tolerance.coerce(tol)
    if space.orientation is not Orientation.UPWARD:
        raise OrientationError(f"metrize needs an upward space, {space.name} is {space.orientation.value}")
    a = space.base
    pts = sorted(set(grid)) if grid is not None else space.interval.grid(9)
    if not tol.close(lam(a), 0.0):
        raise NotMetrizableError(f"lambda(a) = {lam(a)} != 0", witness=[a])
    lams = [lam(u) for u in pts]
    for (u1, l1), (u2, l2) in zip(zip(pts, lams), zip(pts[1:], lams[1:])):
        if not l2 > l1:
            raise NotMetrizableError(f"lambda is not increasing between {u1} and {u2}", witness=[u1, u2])
    for u, lu in zip(pts, lams):
        back = lam_inverse(lu)
        if not tol.close(back, u):
            raise ParameterError(f"lambda_inverse(lambda({u})) = {back}")
    for u, v in itertools.product(pts, repeat=2):
        lhs = lam(space.omega(u, v))
        rhs = lam(u) + lam(v)
        if not tol.close(lhs, rhs):
            raise NotMetrizableError(
                f"lambda(omega({u}, {v})) = {lhs} != lambda({u}) + lambda({v}) = {rhs}",
                witness=[u, v, lhs, rhs],
            )
    dist = space.dist
    return OMetricSpace(
        f"metrized({space.name})", space.domain, lambda x, y: lam(dist(x, y)), omega_sum(),
        Interval(0.0, inf, True, False, 0.0), Orientation.UPWARD, dict(space.params),
        True, f"lambda∘d on {space.description}",
    )


# --------------------------------------------------------------------------
# Declarative configs

_FLAG_FIELDS = {
    "symmetric": "symmetric",
    "nondecreasing_each_var": "nondecreasing",
    "continuous_at_base_pair": "continuous_at_base",
    "associative": "associative",
    "base_idempotent": "base_idempotent",
}


def _num(value, fieldname):
    from .errors import ConfigError

    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return inf
    if value is None:
        return inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(fieldname, f"expected a number, got {value!r}")
    return float(value)


def load_space_config(doc: Mapping[str, Any]) -> OMetricSpace:
    """Build a space from ``{"name": ..., "params": {...}}`` or
    ``{"custom": {"a", "interval", "omega", "dist", "domain", "orientation", "flags"}}``.

    ``omega`` is a built-in id (``sum``, ``max``, ``scaled_sum:2``, ...) or an
    expression in ``u, v``; ``dist`` is an expression in ``x, y`` or a table
    ``{"points": [...], "table": [[...], ...]}``.  Errors name the field.
    """
    from .errors import ConfigError

    if not isinstance(doc, Mapping):
        raise ConfigError("config", "expected a JSON object")
    if "name" in doc and "custom" not in doc:
        params = doc.get("params", {})
        if not isinstance(params, Mapping):
            raise ConfigError("params", "expected an object")
        try:
            return make_builtin(doc["name"], params)
        except ParameterError as exc:
            field_name = "name" if "unknown space" in str(exc) else "params"
            raise ConfigError(field_name, str(exc)) from None
    if "custom" not in doc:
        raise ConfigError("config", "needs either 'name' or 'custom'")
    c = doc["custom"]
    if not isinstance(c, Mapping):
        raise ConfigError("custom", "expected an object")
    for key in ("a", "omega", "dist"):
        if key not in c:
            raise ConfigError(f"custom.{key}", "missing")
    a = _num(c["a"], "custom.a")
    iv_doc = c.get("interval", {"lower": a})
    if not isinstance(iv_doc, Mapping):
        raise ConfigError("custom.interval", "expected an object")
    try:
        interval = Interval(
            _num(iv_doc.get("lower", a), "custom.interval.lower"),
            _num(iv_doc.get("upper"), "custom.interval.upper"),
            bool(iv_doc.get("lower_closed", True)),
            bool(iv_doc.get("upper_closed", False)),
            a,
        )
    except ParameterError as exc:
        raise ConfigError("custom.interval", str(exc)) from None

    try:
        omega = parse_omega(str(c["omega"]))
    except (ExpressionError, ValueError, TypeError) as exc:
        raise ConfigError("custom.omega", str(exc)) from None
    flags = c.get("flags", {})
    if not isinstance(flags, Mapping):
        raise ConfigError("custom.flags", "expected an object")
    updates = {}
    for key, value in flags.items():
        if key not in _FLAG_FIELDS:
            raise ConfigError(f"custom.flags.{key}", f"unknown flag; known: {', '.join(_FLAG_FIELDS)}")
        updates[_FLAG_FIELDS[key]] = Flag.TRUE if value is True else Flag.FALSE if value is False else Flag.UNKNOWN
    if updates:
        omega = replace(omega, **updates)

    dist_doc = c["dist"]
    if isinstance(dist_doc, str):
        try:
            expr = compile_expr(dist_doc, ("x", "y"))
        except ExpressionError as exc:
            raise ConfigError("custom.dist", str(exc)) from None
        dist = expr
        dom_doc = c.get("domain", {})
        if not isinstance(dom_doc, Mapping):
            raise ConfigError("custom.domain", "expected an object")
        lo = -inf if dom_doc.get("lower") is None else _num(dom_doc["lower"], "custom.domain.lower")
        hi = _num(dom_doc.get("upper"), "custom.domain.upper")
        draw = dom_doc.get("draw", [max(lo, -10.0), min(hi, 10.0)])
        domain = RealDomain(
            lo, hi, bool(dom_doc.get("lower_closed", True)), bool(dom_doc.get("upper_closed", True)),
            (float(draw[0]), float(draw[1])),
        )
    elif isinstance(dist_doc, Mapping):
        points = dist_doc.get("points")
        table = dist_doc.get("table")
        if not isinstance(points, list) or not points:
            raise ConfigError("custom.dist.points", "expected a nonempty list")
        if not isinstance(table, list) or len(table) != len(points) or any(
            not isinstance(row, list) or len(row) != len(points) for row in table
        ):
            raise ConfigError("custom.dist.table", f"expected a {len(points)}x{len(points)} matrix")
        pos = {p: k for k, p in enumerate(points)}
        rows = [[_num(v, "custom.dist.table") for v in row] for row in table]
        domain = FiniteDomain(tuple(points))

        def dist(x, y, _rows=rows, _pos=pos):
            return _rows[_pos[x]][_pos[y]]
    else:
        raise ConfigError("custom.dist", "expected an expression string or a table object")

    orient = c.get("orientation", "unknown")
    try:
        orientation = Orientation(orient)
    except ValueError:
        raise ConfigError("custom.orientation", f"unknown orientation {orient!r}") from None
    return OMetricSpace(
        str(c.get("name", "custom")), domain, dist, omega, interval, orientation,
        {}, True, str(c.get("description", "")),
    )
