"""Contraction moduli φ, the ψ family, the C_φ probe and the mixed tree."""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ._backend import KIND_AFFINE, kernels
from .errors import ParameterError
from .expr import ExpressionError, compile_expr
from .patterns import (
    LIFO,
    POW2,
    CompositionTree,
    IntegerPattern,
    evaluate_tree,
    pattern_by_name,
    right_comb_of,
    tree_from_pattern,
)
from .spaces import AxiomResult, OMetricSpace, OmegaOp
from .tolerance import Tolerance

OVERFLOW = 1e300


@dataclass(frozen=True, eq=False)
class PhiFunction:
    func: Callable[[float, float], float]
    base: float
    name: str
    params: dict = field(default_factory=dict)

    def __call__(self, r: float, t: float) -> float:
        return float(self.func(r, t))


@dataclass(frozen=True, eq=False)
class PsiFunction:
    func: Callable[[float], float]
    base: float
    name: str = "psi"

    def __call__(self, t: float) -> float:
        return float(self.func(t))


# --------------------------------------------------------------------------
# Built-in moduli


def _product(r, t):
    return r * t


def _power_shift(r, t):
    # (1 + t)^r - 1
    if r == 0 or t == 0:
        return 0.0
    try:
        return math.expm1(r * math.log1p(t))
    except OverflowError:
        return math.inf


def _log_mix(r, t):
    # ln(1 - r + r e^t)
    if r == 0 or t == 0:
        return 0.0
    if t < 700:
        return math.log1p(r * math.expm1(t))
    return t + math.log(r + (1 - r) * math.exp(-t))


def _exponent(r, t):
    try:
        return t ** r
    except OverflowError:
        return math.inf


LAMBDAS: dict[str, tuple] = {
    # name: (lambda, inverse, base)
    "ln": (math.log, math.exp, 1.0),
    "identity": (lambda t: t, lambda t: t, 0.0),
    "log1p": (math.log1p, math.expm1, 0.0),
}


def resolve_lambda(spec) -> tuple:
    """``"ln"``, ``"identity"``, ``"log1p"``, or a pair of expressions ``"expr_in_t;inverse_in_t"``."""
    if isinstance(spec, tuple):
        return spec
    if spec in LAMBDAS:
        return LAMBDAS[spec]
    if isinstance(spec, str) and ";" in spec:
        fwd_src, inv_src = spec.split(";", 1)
        try:
            fwd = compile_expr(fwd_src, ("t",))
            inv = compile_expr(inv_src, ("t",))
        except ExpressionError as exc:
            raise ParameterError(f"lambda: {exc}") from None
        return fwd, inv, inv(0.0)
    raise ParameterError(f"unknown lambda {spec!r}; use one of {', '.join(LAMBDAS)} or 'expr;inverse'")


def _check_lambda_pair(lam, lam_inv, base):
    grid = [base + x for x in (0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)]
    if abs(lam(base)) > 1e-12:
        raise ParameterError(f"lambda(a) = {lam(base)} must be 0")
    prev = -math.inf
    for u in grid:
        lu = lam(u)
        back = lam_inv(lu)
        if abs(back - u) > 1e-9 * (1 + abs(u)):
            raise ParameterError(f"lambda_inverse(lambda({u})) = {back} != {u}")
        if not lu > prev:
            raise ParameterError(f"lambda is not increasing at {u}")
        prev = lu


def make_phi(name: str, params: dict | None = None, **kwargs) -> PhiFunction:
    """Built-in moduli: ``product`` r·t, ``power_shift`` (1+t)^r − 1,
    ``log_mix`` ln(1 − r + r·e^t), ``exponent`` t^r (base 1) and
    ``lambda_induced`` λ^{-1}(r·λ(t)) for a λ given by name or expression pair."""
    params = dict(params or {})
    params.update(kwargs)
    if name == "product":
        return PhiFunction(_product, 0.0, name)
    if name == "power_shift":
        return PhiFunction(_power_shift, 0.0, name)
    if name == "log_mix":
        return PhiFunction(_log_mix, 0.0, name)
    if name == "exponent":
        return PhiFunction(_exponent, 1.0, name)
    if name == "lambda_induced":
        if "lambda" not in params:
            raise ParameterError("lambda_induced needs a 'lambda' parameter")
        spec = params["lambda"]
        if "lambda_inverse" in params:
            lam, lam_inv = params["lambda"], params["lambda_inverse"]
            base = float(params.get("base", lam_inv(0.0)))
            label = getattr(lam, "__name__", "custom")
        else:
            lam, lam_inv, base = resolve_lambda(spec)
            label = spec if isinstance(spec, str) else "custom"
        _check_lambda_pair(lam, lam_inv, base)

        def induced(r, t):
            try:
                return lam_inv(r * lam(t))
            except OverflowError:
                return math.inf

        return PhiFunction(induced, base, f"lambda_induced[{label}]", {"lambda": label})
    raise ParameterError(
        f"unknown phi {name!r}; known: product, power_shift, log_mix, exponent, lambda_induced"
    )


def phi_from_expr(source: str, base: float, name: str | None = None) -> PhiFunction:
    fn = compile_expr(source, ("r", "t"))
    return PhiFunction(fn, float(base), name or source)


# --------------------------------------------------------------------------
# φ conditions


@dataclass
class PhiReport:
    phi: str
    phi1: AxiomResult
    phi2: AxiomResult
    phi3: AxiomResult

    @property
    def passed(self) -> bool:
        return self.phi1.passed and self.phi2.passed and self.phi3.passed

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "passed": self.passed,
            "phi1": self.phi1.to_dict(),
            "phi2": self.phi2.to_dict(),
            "phi3": self.phi3.to_dict(),
        }


DEFAULT_R_GRID = (0.0, 0.1, 0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0)
DEFAULT_T_OFFSETS = (0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)


def _safe_phi(phi, r, t):
    try:
        x = phi(r, t)
    except (ArithmeticError, ValueError, ExpressionError):
        return math.nan
    return x


def verify_phi_conditions(phi: PhiFunction, r_grid=None, t_grid=None, tol=None) -> PhiReport:
    """Sampled (φ1) annihilation, (φ2) strict monotonicity plus continuity in
    ``t`` at ``a``, and (φ3) the semigroup law on every grid triple."""
    tol = Tolerance.coerce(tol)
    a = phi.base
    rs = sorted(set(r_grid if r_grid is not None else DEFAULT_R_GRID))
    ts = sorted(set(t_grid if t_grid is not None else [a + x for x in DEFAULT_T_OFFSETS]))
    if not rs or not ts:
        raise ParameterError("grids must be nonempty")

    phi1 = AxiomResult("phi1", True)
    for t in ts:
        phi1.checked += 1
        x = _safe_phi(phi, 0.0, t)
        if not tol.close(x, a):
            phi1.passed, phi1.witness, phi1.detail = False, [0.0, t, x], f"phi(0, {t}) = {x} != {a}"
            break
    if phi1.passed:
        for r in rs:
            phi1.checked += 1
            x = _safe_phi(phi, r, a)
            if not tol.close(x, a):
                phi1.passed, phi1.witness, phi1.detail = False, [r, a, x], f"phi({r}, {a}) = {x} != {a}"
                break

    phi2 = AxiomResult("phi2", True)
    pos_r = [r for r in rs if r > 0]
    pos_t = [t for t in ts if t > a]
    for t in pos_t:
        for r1, r2 in zip(pos_r, pos_r[1:]):
            phi2.checked += 1
            x1, x2 = _safe_phi(phi, r1, t), _safe_phi(phi, r2, t)
            if not x1 < x2 and not (math.isinf(x1) and math.isinf(x2)):
                phi2.passed, phi2.witness = False, [r1, r2, t, x1, x2]
                phi2.detail = "not strictly increasing in r"
                break
        if not phi2.passed:
            break
    if phi2.passed:
        for r in pos_r:
            for t1, t2 in zip(pos_t, pos_t[1:]):
                phi2.checked += 1
                x1, x2 = _safe_phi(phi, r, t1), _safe_phi(phi, r, t2)
                if not x1 < x2 and not (math.isinf(x1) and math.isinf(x2)):
                    phi2.passed, phi2.witness = False, [r, t1, t2, x1, x2]
                    phi2.detail = "not strictly increasing in t"
                    break
            if not phi2.passed:
                break
    if phi2.passed:
        for r in pos_r:
            devs = [abs(_safe_phi(phi, r, a + 10.0 ** -j) - a) for j in range(1, 9)]
            phi2.checked += 1
            if not (devs[-1] <= 1e-6 and devs[-1] <= devs[0]):
                phi2.passed, phi2.witness = False, [r, devs[-1]]
                phi2.detail = f"not continuous in t at a for r = {r}"
                break

    phi3 = AxiomResult("phi3", True)
    for r1, r2, t in itertools.product(rs, rs, ts):
        phi3.checked += 1
        inner = _safe_phi(phi, r2, t)
        lhs = _safe_phi(phi, r1, inner)
        rhs = _safe_phi(phi, r1 * r2, t)
        if math.isinf(lhs) and math.isinf(rhs):
            continue
        if not abs(lhs - rhs) <= max(tol.rel, 1e-9) * (1 + abs(rhs)) + tol.abs:
            phi3.passed, phi3.witness = False, [r1, r2, t, lhs, rhs]
            phi3.detail = "phi(r1, phi(r2, t)) != phi(r1 r2, t)"
            break
    return PhiReport(phi.name, phi1, phi2, phi3)


# --------------------------------------------------------------------------
# Trees for tail compositions


def mixed_tree(level: int, i: int) -> CompositionTree:
    """Tree on ``i + 1`` leaves: POW2 blocks of ``2^level`` leaves plus a POW2
    remainder block, the blocks combined by the right comb."""
    if level < 1:
        raise ParameterError("level must be >= 1")
    if i < 0:
        raise ParameterError("i must be >= 0")
    n = i + 1
    size = 1 << level
    if n <= size:
        return tree_from_pattern(POW2, n)
    full, rem = divmod(n, size)
    blocks = [tree_from_pattern(POW2, size)] * full
    if rem:
        blocks.append(tree_from_pattern(POW2, rem))
    return right_comb_of(blocks)


def auto_mixed_level(s: float, r: float, max_level: int = 30) -> int:
    """Smallest ``l >= 1`` with ``s · r^(2^l) < 1``."""
    for level in range(1, max_level + 1):
        if s * r ** (1 << level) < 1:
            return level
    raise ParameterError(f"no level l <= {max_level} gives s*r^(2^l) < 1 for s={s}, r={r}")


def omega_scale(omega: OmegaOp) -> float | None:
    """``s`` when ω is the symmetric affine ``s(u + v)``, else None."""
    if omega.kernel is None:
        return None
    kind, p, q = omega.kernel
    return p if kind == KIND_AFFINE and p == q else None


@dataclass(frozen=True)
class TreeFamily:
    """A pattern, or the mixed tree with a fixed or automatic level."""

    pattern: IntegerPattern | None = None
    level: int | None = None
    mixed: bool = False

    @classmethod
    def parse(cls, text: str) -> "TreeFamily":
        text = text.strip().lower()
        if text.startswith("mixed"):
            _, _, arg = text.partition(":")
            return cls(None, int(arg) if arg else None, True)
        return cls(pattern_by_name(text))

    def resolve(self, omega: OmegaOp, r: float) -> "TreeFamily":
        if not self.mixed or self.level is not None:
            return self
        s = omega_scale(omega)
        if s is None:
            raise ParameterError("automatic mixed level needs omega = s(u+v)")
        return TreeFamily(None, auto_mixed_level(s, r), True)

    def tree(self, leaves: int) -> CompositionTree:
        if self.mixed:
            if self.level is None:
                raise ParameterError("mixed family has no level; call resolve first")
            return mixed_tree(self.level, leaves - 1)
        return tree_from_pattern(self.pattern, leaves)

    def describe(self) -> str:
        if self.mixed:
            return "mixed(auto)" if self.level is None else f"mixed(l={self.level})"
        return self.pattern.name


# --------------------------------------------------------------------------
# C_φ probe


@dataclass
class CphiProbe:
    in_cphi_evidence: bool
    r: float
    epsilon: float
    family: str
    n_max: int
    i_values: list
    tol: float
    trace: list  # (n, i, h)
    overflow: bool = False
    worst: tuple | None = None

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,i,h_value\n")
        for n, i, h in self.trace:
            buf.write(f"{n},{i},{h:.17g}\n")
        return buf.getvalue()

    def to_dict(self, with_trace: bool = True) -> dict:
        out = {
            "in_cphi_evidence": self.in_cphi_evidence,
            "r": self.r,
            "epsilon": self.epsilon,
            "tree_family": self.family,
            "grid": {"n": [1, self.n_max], "i": list(self.i_values)},
            "tol": self.tol,
            "overflow": self.overflow,
        }
        if self.worst is not None:
            out["worst"] = {"n": self.worst[0], "i": self.worst[1], "h_value": self.worst[2]}
        if with_trace:
            out["trace_csv"] = self.trace_csv()
        return out


def default_i_values(i_max: int, count: int = 17) -> list[int]:
    """Evenly spaced i values in ``[0, i_max]``, including ``i_max // 2`` and ``i_max``."""
    picks = {round(j * i_max / (count - 1)) for j in range(count)}
    picks.update({0, i_max // 2, (i_max + 1) // 2, i_max})
    return sorted(picks)


def tail_values(phi: PhiFunction, r: float, epsilon: float, count: int) -> list[float]:
    """``φ(r^j, ε)`` for ``j = 0 .. count-1``."""
    return [phi(r ** j, epsilon) for j in range(count)]


def cphi_probe(
    phi: PhiFunction,
    omega: OmegaOp,
    family,
    r: float,
    epsilon: float,
    n_max: int = 120,
    i_max: int = 120,
    tol: float = 1e-3,
    i_values: Sequence[int] | None = None,
) -> CphiProbe:
    """Sample ``h_{n,i}(r, ε) = h(φ(r^n, ε), ..., φ(r^{n+i}, ε))`` over
    ``1 <= n <= n_max`` and the given ``i`` values.

    Evidence is positive when every sample with ``n >= n_max/2`` and
    ``i >= i_max/2`` lies within ``tol`` of ``a``.
    """
    a = phi.base
    if not epsilon > a:
        raise ParameterError(f"epsilon must exceed a = {a}")
    if r < 0:
        raise ParameterError("r must be >= 0")
    if n_max < 1 or i_max < 0:
        raise ParameterError("n_max must be >= 1 and i_max >= 0")
    if isinstance(family, IntegerPattern):
        family = TreeFamily(family)
    elif isinstance(family, str):
        family = TreeFamily.parse(family)
    i_vals = sorted(set(i_values)) if i_values is not None else default_i_values(i_max)
    i_top = max(i_vals)
    try:
        family = family.resolve(omega, r)
    except ParameterError:
        if not family.mixed:
            raise
        # no level makes the blocks contract: fall back to the largest level
        family = TreeFamily(None, 30, True)
    terms = tail_values(phi, r, epsilon, n_max + i_top + 1)
    term_arr = np.asarray(terms, dtype=np.float64)
    trace = []
    overflow = not all(math.isfinite(t) for t in terms)
    for i in i_vals:
        tree = family.tree(i + 1)
        if omega.kernel is not None and not overflow:
            kind, p, q = omega.kernel
            hs = kernels.eval_windows(tree.postfix(), term_arr, 1, n_max, kind, p, q)
        else:
            hs = []
            for n in range(1, n_max + 1):
                try:
                    hs.append(evaluate_tree(tree, omega, terms[n: n + i + 1]))
                except (ArithmeticError, ValueError):
                    hs.append(math.nan)
        for n, h in zip(range(1, n_max + 1), hs):
            h = float(h)
            if not math.isfinite(h) or abs(h) > OVERFLOW:
                overflow = True
            trace.append((n, i, h))
    quadrant = [(n, i, h) for n, i, h in trace if 2 * n >= n_max and 2 * i >= i_max]
    if not quadrant:
        quadrant = trace
    worst = max(quadrant, key=lambda e: abs(e[2] - a) if e[2] == e[2] else math.inf)
    positive = not overflow and all(abs(h - a) < tol for _, _, h in quadrant)
    return CphiProbe(positive, r, epsilon, family.describe(), n_max, i_vals, tol, trace, overflow, worst)


def estimate_cphi_sup(
    phi: PhiFunction,
    omega: OmegaOp,
    family,
    epsilon: float | None = None,
    resolution: float = 1e-3,
    **probe_kwargs,
) -> float:
    """Bisection on ``r in [0, 1]`` over probe outcomes; returns the largest
    ``r`` seen with positive evidence (0 when even tiny ``r`` fails)."""
    eps = phi.base + 1.0 if epsilon is None else epsilon
    if not cphi_probe(phi, omega, family, 0.0, eps, **probe_kwargs).in_cphi_evidence:
        return 0.0
    lo, hi = 0.0, 1.0
    if cphi_probe(phi, omega, family, hi, eps, **probe_kwargs).in_cphi_evidence:
        return hi
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if cphi_probe(phi, omega, family, mid, eps, **probe_kwargs).in_cphi_evidence:
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# Contractive sequences and ψ tails


def is_contractive_prefix(space: OMetricSpace, phi: PhiFunction, k: float, prefix: Sequence, tol=None) -> bool:
    """``d(x_n, x_{n+1}) <= φ(k, d(x_{n-1}, x_n))`` along the whole prefix."""
    tol = Tolerance.coerce(tol)
    if len(prefix) < 2:
        raise ParameterError("prefix needs at least two points")
    dists = [space.d(x, y) for x, y in zip(prefix, prefix[1:])]
    return all(tol.le(nxt, phi(k, prev)) for prev, nxt in zip(dists, dists[1:]))


def psi_iterates(psi: PsiFunction, epsilon: float, count: int, tol: float = 0.0) -> tuple[list[float], bool]:
    """``ψ^{(0)}(ε) .. ψ^{(count-1)}(ε)``; stops repeating once ψ(t) = t within
    ``tol`` and flags overflow past 1e300."""
    out = [float(epsilon)]
    overflow = False
    while len(out) < count:
        t = out[-1]
        nxt = psi(t)
        if not math.isfinite(nxt) or abs(nxt) > OVERFLOW:
            overflow = True
            out.extend([math.inf] * (count - len(out)))
            break
        if abs(nxt - t) <= tol:
            out.extend([nxt] * (count - len(out)))
            break
        out.append(nxt)
    return out, overflow


@dataclass
class PsiTail:
    value: float
    n: int
    i: int
    iterates: list
    overflow: bool
    scaled_tail_sum: float | None = None
    pow2_sum_bound: float | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "n": self.n,
            "i": self.i,
            "overflow": self.overflow,
            "scaled_tail_sum": self.scaled_tail_sum,
            "pow2_sum_bound": self.pow2_sum_bound,
        }


def psi_tail(
    psi: PsiFunction, omega: OmegaOp, pattern: IntegerPattern, epsilon: float, n: int, i: int, tol: float = 0.0
) -> PsiTail:
    """Fold ``ψ^{(n)}(ε) .. ψ^{(n+i)}(ε)`` along ``pattern``.

    For ω = s(u + v) also returns the scaled tail sum
    ``s^{1-n} Σ_{j=n}^{n+i} s^j ψ^{(j)}(ε)`` and the bound
    ``s^{⌈log2(i+1)⌉} Σ_{j=n}^{n+i} ψ^{(j)}(ε)``.
    """
    if not epsilon > psi.base:
        raise ParameterError(f"epsilon must exceed a = {psi.base}")
    if n < 0 or i < 0:
        raise ParameterError("n and i must be >= 0")
    its, overflow = psi_iterates(psi, epsilon, n + i + 1, tol)
    window = its[n: n + i + 1]
    if overflow and not all(math.isfinite(x) for x in window):
        value = math.inf
    else:
        value = evaluate_tree(tree_from_pattern(pattern, i + 1), omega, window)
        if not math.isfinite(value) or abs(value) > OVERFLOW:
            overflow = True
    scaled = bound = None
    s = omega_scale(omega)
    if s is not None:
        scaled = math.fsum(s ** (j - n + 1) * window[j - n] for j in range(n, n + i + 1))
        bound = s ** i.bit_length() * math.fsum(window)
    return PsiTail(value, n, i, window, overflow, scaled, bound)
