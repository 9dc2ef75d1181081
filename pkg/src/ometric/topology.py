"""Sequence probes: O-convergence, Cauchyness, balls and the uniqueness conditions."""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .errors import ParameterError
from .expr import ExpressionError, compile_expr
from .spaces import AxiomResult, Interval, OMetricSpace, OmegaOp, continuity_probe
from .tolerance import Tolerance

MAX_CAUCHY_PAIRS = 10_000


@dataclass(frozen=True)
class SequenceSpec:
    gen: Callable[[int], Any]
    description: str = ""

    @classmethod
    def from_expr(cls, source: str) -> "SequenceSpec":
        """A sequence given by an expression in ``n`` (1-based)."""
        fn = compile_expr(source, ("n",))
        return cls(lambda n: fn(n), source)

    def __call__(self, n: int):
        return self.gen(n)


@dataclass
class ConvergenceVerdict:
    status: str  # converges | diverges | inconclusive
    tol: float
    horizon: int
    witness_limit: Any = None
    tail_residuals: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    overflow: bool = False
    limit_estimate: float | None = None
    note: str = ""

    @property
    def converges(self) -> bool:
        return self.status == "converges"

    def residual_trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,residual\n")
        for n, r in self.tail_residuals:
            buf.write(f"{n},{r:.17g}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {
            "status": self.status,
            "tol": self.tol,
            "horizon": self.horizon,
            "witnesses": [dict(w) for w in self.witnesses],
            "residual_trace_csv": self.residual_trace_csv(),
        }
        if self.witness_limit is not None:
            out["witness_limit"] = self.witness_limit
        if self.limit_estimate is not None:
            out["limit_estimate"] = self.limit_estimate
        if self.overflow:
            out["overflow"] = True
        if self.note:
            out["note"] = self.note
        return out


def _check_probe_args(tol, horizon):
    if not tol > 0:
        raise ParameterError("tol must be > 0")
    if horizon < 2:
        raise ParameterError("horizon must be >= 2")


def o_converges(space: OMetricSpace, seq, limit, tol: float = 1e-6, horizon: int = 1000) -> ConvergenceVerdict:
    """Probe ``d(x_n, limit) -> a`` over the last half of ``1..horizon``."""
    _check_probe_args(tol, horizon)
    a = space.base
    start = (horizon + 1) // 2
    trace = []
    for n in range(1, horizon + 1):
        trace.append((n, abs(space.d(seq(n), limit) - a)))
    tail = trace[start - 1:]
    worst = max(tail, key=lambda p: p[1])
    witnesses = [{"n": worst[0], "m": None, "value": worst[1]}]
    if all(r < tol for _, r in tail):
        return ConvergenceVerdict("converges", tol, horizon, limit, tail, witnesses)
    status = "inconclusive" if tail[-1][1] < tail[0][1] else "diverges"
    return ConvergenceVerdict(status, tol, horizon, None, tail, witnesses)


def _sample_indices(lo: int, hi: int, k: int) -> list[int]:
    """Geometrically spaced integers in ``[lo, hi]`` with both endpoints."""
    if hi - lo + 1 <= k:
        return list(range(lo, hi + 1))
    ratio = (hi / lo) ** (1.0 / (k - 1))
    picks = {lo, hi}
    picks.update(min(hi, max(lo, round(lo * ratio ** j))) for j in range(k))
    j = lo
    # top up with an even stride if rounding collided
    step = max(1, (hi - lo) // k)
    while len(picks) < k and j <= hi:
        picks.add(j)
        j += step
    return sorted(picks)


def is_cauchy(space: OMetricSpace, seq, tol: float = 1e-6, horizon: int = 1000) -> ConvergenceVerdict:
    """Probe ``d(x_n, x_m) -> a`` over ``horizon/2 <= n < m <= horizon``.

    The index set is subsampled geometrically so at most 10^4 pairs are
    checked.  Witnesses: the span pair ``(horizon//2, horizon)`` and the pair
    with the largest deviation.
    """
    _check_probe_args(tol, horizon)
    a = space.base
    lo = max(1, horizon // 2)
    k = int((1 + math.sqrt(1 + 8 * MAX_CAUCHY_PAIRS)) / 2)
    idx = _sample_indices(lo, horizon, k)
    pts = {n: seq(n) for n in idx}
    worst = (None, None, -1.0)
    per_n = []
    late = -1.0
    late_from = lo + (horizon - lo) // 2
    for n in idx:
        row = 0.0
        for m in idx:
            if m <= n:
                continue
            dev = abs(space.d(pts[n], pts[m]) - a)
            if dev > row:
                row = dev
            if dev > worst[2]:
                worst = (n, m, dev)
            if n >= late_from and dev > late:
                late = dev
        per_n.append((n, row))
    span = abs(space.d(pts[lo], pts[horizon]) - a)
    witnesses = [
        {"n": lo, "m": horizon, "value": span},
        {"n": worst[0], "m": worst[1], "value": worst[2]},
    ]
    if worst[2] < tol:
        status = "converges"
    elif 0 <= late < worst[2] / 2:
        status = "inconclusive"
    else:
        status = "diverges"
    note = f"{sum(1 for n in idx for m in idx if m > n)} pairs over {len(idx)} indices"
    return ConvergenceVerdict(status, tol, horizon, None, per_n, witnesses, note=note)


def in_ball(space: OMetricSpace, center, radius: float, candidate) -> bool:
    if not radius > 0:
        raise ParameterError("radius must be > 0")
    return abs(space.d(center, candidate) - space.base) < radius


@dataclass
class UniquenessReport:
    u1: AxiomResult
    u2: AxiomResult

    @property
    def passed(self) -> bool:
        return self.u1.passed and self.u2.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "U1": self.u1.to_dict(), "U2": self.u2.to_dict()}


def _ev(omega, u, v):
    try:
        x = float(omega(u, v))
    except (ArithmeticError, ValueError, ExpressionError):
        return None
    return x if x == x else None


def check_uniqueness_conditions(
    omega: OmegaOp, interval: Interval, samples: Sequence[float] | None = None, tol=None
) -> UniquenessReport:
    """Sampled (U1) continuity of ω at ``(a, a)`` and (U2) monotonicity plus
    the annihilator property ``ω(u, a) = a  iff  u = a``."""
    tol = Tolerance.coerce(tol)
    a = interval.base
    pts = sorted(set(samples)) if samples is not None else interval.grid(9)
    pts = [u for u in pts if interval.contains(u)]
    u1 = continuity_probe(omega, interval)
    u1.name = "U1"

    u2 = AxiomResult("U2", True)
    for (x1, x2), v in itertools.product(itertools.combinations(pts, 2), pts):
        u2.checked += 1
        left1, left2 = _ev(omega, x1, v), _ev(omega, x2, v)
        right1, right2 = _ev(omega, v, x1), _ev(omega, v, x2)
        if None in (left1, left2) or not tol.le(left1, left2):
            u2.passed, u2.witness = False, [x1, x2, v, left1, left2]
            u2.detail = f"not nondecreasing in the first variable: omega({x1}, {v}) > omega({x2}, {v})"
            break
        if None in (right1, right2) or not tol.le(right1, right2):
            u2.passed, u2.witness = False, [v, x1, x2, right1, right2]
            u2.detail = f"not nondecreasing in the second variable: omega({v}, {x1}) > omega({v}, {x2})"
            break
    if u2.passed:
        for u in pts:
            u2.checked += 1
            is_base = tol.close(u, a)
            first = _ev(omega, u, a)
            second = _ev(omega, a, u)
            ok_first = first is not None and tol.close(first, a) == is_base
            ok_second = second is not None and tol.close(second, a) == is_base
            if not (ok_first or ok_second):
                u2.passed, u2.witness = False, [u, first, second]
                u2.detail = "annihilator property omega(u, a) = a iff u = a fails"
                break
    return UniquenessReport(u1, u2)
