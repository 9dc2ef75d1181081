"""ω-series, b-metric closed forms, the binary split and polygon checks.

Series terms are indexed from ``t_0``; trees from :mod:`patterns` use 1-based
leaves, so term ``t_i`` sits on leaf ``i + 1``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._backend import kernels
from .errors import ParameterError, TreeDomainError
from .patterns import (
    FIFO,
    CompositionTree,
    IntegerPattern,
    evaluate_tree,
    tree_from_pattern,
)
from .spaces import OMetricSpace, OmegaOp
from .tolerance import Tolerance
from .topology import ConvergenceVerdict

OVERFLOW = 1e300


@dataclass(frozen=True)
class OmegaSeries:
    terms: Callable[[int], float]
    omega: OmegaOp
    pattern: IntegerPattern
    description: str = ""

    def values(self, n: int) -> list[float]:
        return [float(self.terms(i)) for i in range(n + 1)]


def partial_composition(series: OmegaSeries, n: int, interval=None) -> float:
    """ω^n = h_{n+1}(t_0, ..., t_n) folded along the series pattern."""
    if n < 0:
        raise ParameterError("n must be >= 0")
    tree = tree_from_pattern(series.pattern, n + 1)
    return evaluate_tree(tree, series.omega, series.values(n), interval)


def partial_compositions(series: OmegaSeries, horizon: int) -> list[float]:
    """ω^0 .. ω^horizon, stopping early after the first value above 1e300."""
    vals = series.values(horizon)
    out: list[float] = []
    if series.pattern is FIFO:
        # left comb: each partial fold extends the previous one
        acc = vals[0]
        out.append(acc)
        for t in vals[1:]:
            acc = series.omega(acc, t)
            out.append(acc)
            if not _finite(acc):
                break
        return out
    for n in range(horizon + 1):
        tree = tree_from_pattern(series.pattern, n + 1)
        x = evaluate_tree(tree, series.omega, vals[: n + 1])
        out.append(x)
        if not _finite(x):
            break
    return out


def _finite(x: float) -> bool:
    return math.isfinite(x) and abs(x) <= OVERFLOW


def probe_composable(series: OmegaSeries, tol: float = 1e-9, horizon: int = 200) -> ConvergenceVerdict:
    """Composable iff successive ω^n differ by less than ``tol`` over the last
    quarter of the horizon.  Overflow past 1e300 gives a diverges verdict."""
    if horizon < 4:
        raise ParameterError("horizon must be >= 4")
    if not tol > 0:
        raise ParameterError("tol must be > 0")
    vals = partial_compositions(series, horizon)
    if not _finite(vals[-1]):
        n = len(vals) - 1
        return ConvergenceVerdict(
            "diverges", tol, horizon, None, [(n, math.inf)],
            [{"n": n, "m": None, "value": vals[-1]}], overflow=True,
            note=f"partial composition left the finite range at n={n}",
        )
    start = horizon - horizon // 4
    diffs = [(n, abs(vals[n] - vals[n - 1])) for n in range(start, horizon + 1)]
    worst = max(diffs, key=lambda p: p[1])
    witnesses = [{"n": worst[0], "m": worst[0] - 1, "value": worst[1]}]
    if worst[1] < tol:
        status = "converges"
    elif diffs[-1][1] < diffs[0][1]:
        status = "inconclusive"
    else:
        status = "diverges"
    return ConvergenceVerdict(status, tol, horizon, None, diffs, witnesses, limit_estimate=vals[-1])


def trace_csv(values: Sequence[float]) -> str:
    buf = io.StringIO()
    buf.write("n,omega_n\n")
    for n, x in enumerate(values):
        buf.write(f"{n},{x:.17g}\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# b-metric closed forms


def _check_s(s):
    if not s >= 1:
        raise ParameterError(f"s must be >= 1, got {s}")


def lifo_closed_form(s: float, terms: Sequence[float]) -> float:
    """Right-comb fold of ``t_0..t_n`` under ω = s(u + v)."""
    _check_s(s)
    if len(terms) < 2:
        raise ParameterError("need t_0..t_n with n >= 1")
    return float(kernels.lifo_sum(float(s), np.asarray(terms, dtype=np.float64)))


def fifo_closed_form(s: float, terms: Sequence[float]) -> float:
    """Left-comb fold of ``t_0..t_n`` under ω = s(u + v)."""
    _check_s(s)
    if len(terms) < 2:
        raise ParameterError("need t_0..t_n with n >= 1")
    return float(kernels.fifo_sum(float(s), np.asarray(terms, dtype=np.float64)))


def ceil_log2(n: int) -> int:
    if n < 1:
        raise ParameterError("ceil_log2 needs n >= 1")
    return (n - 1).bit_length()


def pow2_bound(s: float, terms: Sequence[float]) -> float:
    """s^{⌈log2 n⌉} Σ t_i for ``t_1..t_n``."""
    _check_s(s)
    if len(terms) < 1:
        raise ParameterError("need at least one term")
    return float(s) ** ceil_log2(len(terms)) * math.fsum(terms)


def pow2_exact(s: float, terms: Sequence[float]) -> float:
    """POW2 fold of ``t_1..t_n`` under ω = s(u + v), summed block by block."""
    _check_s(s)
    if len(terms) < 2:
        raise ParameterError("pow2_exact needs n >= 2")
    return float(kernels.pow2_exact_sum(float(s), np.asarray(terms, dtype=np.float64)))


@dataclass(frozen=True)
class BinarySplit:
    """Block decomposition of ``n`` behind the POW2 fold.

    ``l_seq`` holds ``l_0..l_{N-1}``; the final ``l_N`` is always 0 and omitted.
    """

    n: int
    n_seq: tuple
    l_seq: tuple

    @property
    def N(self) -> int:
        return len(self.l_seq)

    @property
    def block_sizes(self) -> tuple:
        return tuple(b - a for a, b in zip(self.n_seq, self.n_seq[1:]))

    def exponents(self) -> tuple:
        """``l_r - 1`` for every split plus the trailing 0, largest first."""
        return tuple(l - 1 for l in self.l_seq) + (0,)

    def reconstructed(self) -> int:
        return sum(1 << e for e in self.exponents())

    def reconstructs(self) -> bool:
        return self.reconstructed() == self.n

    def matches_binary_digits(self) -> bool:
        """Exponents coincide with the set-bit positions of ``n``."""
        return _exponents_equal_bits(self.exponents(), self.n)

    def matches_predecessor_digits(self) -> bool:
        """Split exponents coincide with the set-bit positions of ``n - 1``."""
        return _exponents_equal_bits(tuple(l - 1 for l in self.l_seq), self.n - 1)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_seq": list(self.n_seq),
            "l_seq": list(self.l_seq),
            "N": self.N,
            "reconstructs": self.reconstructs(),
            "matches_binary_digits": self.matches_binary_digits(),
        }


def _exponents_equal_bits(exps: tuple, m: int) -> bool:
    bits = [j for j in range(m.bit_length()) if m >> j & 1]
    return sorted(exps) == bits


def binary_split(n: int) -> BinarySplit:
    if n < 2:
        raise ParameterError("binary_split needs n >= 2")
    n_seq, l_seq = kernels.binary_split_seq(int(n))
    return BinarySplit(int(n), tuple(n_seq), tuple(l_seq))


# --------------------------------------------------------------------------
# Polygon inequalities


@dataclass
class PolygonReport:
    tree: str
    lhs: float
    rhs: float
    slack: float
    holds: bool
    error: str = ""
    witness: str = ""

    def to_dict(self) -> dict:
        out = {"tree": self.tree, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds}
        if self.error:
            out["error"] = self.error
            out["witness_subtree"] = self.witness
        return out


def consecutive_distances(space: OMetricSpace, points: Sequence) -> list[float]:
    return [space.d(x, y) for x, y in zip(points, points[1:])]


def polygon_check(
    space: OMetricSpace, points: Sequence, tree: CompositionTree, tol=None, strict: bool = True
) -> PolygonReport:
    """Check ``d(x_0, x_{n+1}) <= tree-fold of the consecutive distances``.

    An intermediate value escaping ``I_a`` raises :class:`TreeDomainError`;
    with ``strict=False`` it is returned as a failed report instead.
    """
    tol = Tolerance.coerce(tol)
    if len(points) != tree.leaf_count + 1:
        raise ParameterError(f"tree has {tree.leaf_count} leaves, so {tree.leaf_count + 1} points are needed")
    lhs = space.d(points[0], points[-1])
    dists = consecutive_distances(space, points)
    try:
        rhs = evaluate_tree(tree, space.omega, dists, space.interval, tol)
    except TreeDomainError as exc:
        if strict:
            raise
        return PolygonReport(tree.to_string(), lhs, math.nan, math.nan, False, str(exc), exc.subtree.to_string())
    return PolygonReport(tree.to_string(), lhs, rhs, rhs - lhs, tol.le(lhs, rhs))


COEFF_VARIANTS = ("lifo", "fifo", "mean_constant", "pow2_constant")


def bmetric_polygon_coeffs(s: float, n: int, variant: str) -> list[float]:
    """Coefficients ``a_1..a_{n+1}`` with ``d(x_0, x_{n+1}) <= Σ a_i d(x_{i-1}, x_i)``."""
    _check_s(s)
    if n < 1:
        raise ParameterError("n must be >= 1")
    s = float(s)
    if variant == "lifo":
        return [s ** i for i in range(1, n + 1)] + [s ** n]
    if variant == "fifo":
        return [s ** n] + [s ** (n - j + 2) for j in range(2, n + 2)]
    if variant == "mean_constant":
        if s == 1.0:
            k = 1.0
        else:
            k = (2 * s ** (n + 1) - s ** n - s) / ((n + 1) * (s - 1))
        return [k] * (n + 1)
    if variant == "pow2_constant":
        return [s ** ceil_log2(n + 1)] * (n + 1)
    raise ParameterError(f"unknown variant {variant!r}; known: {', '.join(COEFF_VARIANTS)}")


@dataclass
class CoefficientReport:
    variant: str
    coefficients: list
    lhs: float
    rhs: float
    slack: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "coefficients": list(self.coefficients),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "holds": self.holds,
        }


def coefficient_check(space: OMetricSpace, points: Sequence, coeffs: Sequence[float], variant: str = "", tol=None):
    """Check the weighted-sum polygon bound on one point tuple."""
    tol = Tolerance.coerce(tol)
    dists = consecutive_distances(space, points)
    if len(coeffs) != len(dists):
        raise ParameterError(f"{len(dists)} distances but {len(coeffs)} coefficients")
    lhs = space.d(points[0], points[-1])
    rhs = math.fsum(c * d for c, d in zip(coeffs, dists))
    return CoefficientReport(variant, list(coeffs), lhs, rhs, rhs - lhs, tol.le(lhs, rhs))
