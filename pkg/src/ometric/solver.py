"""Picard iteration for k-φ contractions and α-ψ contractive maps."""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

from .contraction import (
    PhiFunction,
    PsiFunction,
    TreeFamily,
    estimate_cphi_sup,
    omega_scale,
)
from .errors import AdmissibilityError, ParameterError, ProblemError
from .patterns import LIFO, IntegerPattern
from .spaces import Flag, OMetricSpace, Orientation
from .tolerance import Tolerance
from .topology import check_uniqueness_conditions

OUTSIDE_REGIME = "outside certified Cauchy regime"
INSIDE_REGIME = "inside estimated Cauchy regime"


@dataclass(frozen=True)
class FixedPointProblem:
    space: OMetricSpace
    map: Callable[[Any], Any]
    start: Any
    phi: PhiFunction | None = None
    k: float | None = None
    alpha: Callable[[Any, Any], float] | None = None
    psi: PsiFunction | None = None

    @property
    def mode(self) -> str:
        return "k-phi" if self.phi is not None else "alpha-psi"

    def validate(self) -> None:
        sp = self.space
        if sp.orientation is not Orientation.UPWARD:
            raise ProblemError(f"space {sp.name} must be upward, it is {sp.orientation.value}")
        om = sp.omega
        for label, flag in (
            ("nondecreasing_each_var", om.nondecreasing),
            ("continuous_at_base_pair", om.continuous_at_base),
            ("base_idempotent", om.base_idempotent),
        ):
            if flag is not Flag.TRUE:
                raise ProblemError(f"omega of {sp.name} must declare {label}")
        has_phi = self.phi is not None and self.k is not None
        has_psi = self.alpha is not None and self.psi is not None
        if has_phi == has_psi:
            raise ProblemError("give exactly one modulus: (phi, k) or (alpha, psi)")
        if has_phi and self.k < 0:
            raise ProblemError("k must be >= 0")
        if has_phi and abs(self.phi.base - sp.base) > 1e-12:
            raise ProblemError(f"phi base {self.phi.base} differs from space base {sp.base}")

    def with_start(self, start) -> "FixedPointProblem":
        return replace(self, start=start)


# --------------------------------------------------------------------------
# Contraction check


@dataclass
class ContractionReport:
    holds: bool
    min_slack: float
    witness: list | None
    checked: int
    sample_description: str

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "min_slack": self.min_slack,
            "witness": self.witness,
            "checked": self.checked,
            "sample_description": self.sample_description,
        }


def verify_contraction(
    space: OMetricSpace,
    mapping: Callable,
    phi: PhiFunction,
    k: float,
    sample_pairs: Sequence[tuple] | None = None,
    tol=None,
    n_samples: int = 8,
    seed: int = 0,
) -> ContractionReport:
    """Check ``d(Tx, Ty) <= φ(k, d(x, y))`` on every pair; slack is RHS − LHS."""
    if k < 0:
        raise ParameterError("k must be >= 0")
    tol = Tolerance.coerce(tol)
    if sample_pairs is None:
        pts = space.sample_points(n_samples, seed)
        pairs = list(itertools.combinations(pts, 2))
        desc = f"all pairs of {n_samples} draws from {space.domain.describe()} (seed {seed})"
    else:
        pairs = list(sample_pairs)
        desc = f"{len(pairs)} supplied pairs"
    worst, witness, ok = math.inf, None, True
    for x, y in pairs:
        lhs = space.d(mapping(x), mapping(y))
        rhs = phi(k, space.d(x, y))
        slack = rhs - lhs
        if slack < worst:
            worst, witness = slack, [x, y, lhs, rhs]
        if not tol.le(lhs, rhs):
            ok = False
    return ContractionReport(ok, worst, witness, len(pairs), desc)


# --------------------------------------------------------------------------
# Reports


@dataclass
class IterationReport:
    iterates: list
    step_residuals: list
    fixpoint_residual: float
    status: str  # converged | max_iter | stalled
    tol: float
    max_iter: int
    mode: str
    alpha_trace: list | None = None
    envelope: list | None = None
    envelope_holds: bool | None = None
    contraction: ContractionReport | None = None
    kappa: float | None = None
    regime: str = ""
    residual_bound: float | None = None
    warnings: list = field(default_factory=list)

    @property
    def fixed_point(self):
        return self.iterates[-1]

    @property
    def steps(self) -> int:
        """Index ``n`` at which the stopping rule fired (or the last one tried)."""
        return len(self.step_residuals) - 1

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,x_n,step_residual,alpha\n")
        for n, res in enumerate(self.step_residuals):
            x = self.iterates[n] if n < len(self.iterates) else ""
            x_txt = f"{x:.17g}" if isinstance(x, float) else str(x)
            alpha = ""
            if self.alpha_trace is not None and n < len(self.alpha_trace):
                alpha = f"{self.alpha_trace[n]:.17g}"
            buf.write(f"{n},{x_txt},{res:.17g},{alpha}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "status": self.status,
            "fixed_point": self.fixed_point,
            "steps": self.steps,
            "fixpoint_residual": self.fixpoint_residual,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "iterates": list(self.iterates),
            "step_residuals": list(self.step_residuals),
        }
        if self.alpha_trace is not None:
            out["alpha_trace"] = list(self.alpha_trace)
        if self.envelope is not None:
            out["envelope"] = list(self.envelope)
            out["envelope_holds"] = self.envelope_holds
        if self.contraction is not None:
            out["contraction"] = self.contraction.to_dict()
        if self.kappa is not None:
            out["kappa_estimate"] = self.kappa
        if self.regime:
            out["regime"] = self.regime
        if self.residual_bound is not None:
            out["residual_bound"] = self.residual_bound
        out["warnings"] = list(self.warnings)
        return out


# --------------------------------------------------------------------------
# sup C_φ estimates, cached per (φ, ω) pair

_KAPPA_CACHE: dict = {}


def kappa_family(space: OMetricSpace) -> TreeFamily:
    """Mixed trees for ω = s(u + v) with s > 1, the right comb otherwise."""
    s = omega_scale(space.omega)
    if s is not None and s > 1:
        return TreeFamily(None, None, True)
    return TreeFamily(LIFO)


def estimate_kappa(phi: PhiFunction, space: OMetricSpace, resolution: float = 1e-2) -> float:
    """Probe-based estimate of sup C_φ on a 60 × 60 grid at tolerance 1e-3."""
    key = (id(phi), id(space.omega))
    hit = _KAPPA_CACHE.get(key)
    if hit is not None and hit[0] is phi and hit[1] is space.omega:
        return hit[2]
    kappa = estimate_cphi_sup(
        phi, space.omega, kappa_family(space), resolution=resolution, n_max=60, i_max=60, tol=1e-3
    )
    _KAPPA_CACHE[key] = (phi, space.omega, kappa)
    return kappa


# --------------------------------------------------------------------------
# Solvers


def _iterate(space, mapping, start, tol, max_iter, on_step=None, stall_window: int = 50):
    """Shared Picard loop.  Stops once ``d(x_n, T x_n) - a < tol``."""
    a = space.base
    xs = [start]
    residuals = []
    x = start
    best, since_best = math.inf, 0
    status = "max_iter"
    for n in range(max_iter + 1):
        y = mapping(x)
        e = space.d(x, y) - a
        residuals.append(e)
        if on_step is not None:
            on_step(n, x, y)
        if e < tol:
            # report x* = T x_n: for a contraction it is at least as close to the fixed point
            status = "converged"
            xs.append(y)
            break
        if not math.isfinite(e):
            status = "stalled"
            break
        if e < best:
            best, since_best = e, 0
        else:
            since_best += 1
            if since_best >= stall_window:
                status = "stalled"
                break
        if n == max_iter:
            break
        xs.append(y)
        x = y
    return xs, residuals, status


def picard(
    problem: FixedPointProblem,
    tol: float = 1e-10,
    max_iter: int = 1000,
    kappa: float | None = None,
    check_contraction: bool = True,
) -> IterationReport:
    """Iterate ``x_{n+1} = T x_n`` until the step residual drops below ``tol``.

    The report carries the envelope ``φ(k^n, d(x_0, x_1)) - a + tol`` for every
    step, the sampled contraction check, and the regime tag relative to the
    estimated sup C_φ (``kappa``; estimated when not given).
    """
    problem.validate()
    if problem.phi is None:
        raise ProblemError("picard needs (phi, k); use alpha_psi_solve for (alpha, psi)")
    if not tol > 0 or max_iter < 1:
        raise ParameterError("tol must be > 0 and max_iter >= 1")
    space, phi, k = problem.space, problem.phi, problem.k
    a = space.base
    warnings = []
    contraction = None
    if check_contraction:
        contraction = verify_contraction(space, problem.map, phi, k)
        if not contraction.holds:
            warnings.append("contraction inequality failed on the default sample")
    if kappa is None:
        kappa = estimate_kappa(phi, space)
    regime = OUTSIDE_REGIME if k >= kappa else INSIDE_REGIME
    if k >= kappa:
        warnings.append(f"k = {k} is not below the estimated sup C_phi = {kappa}")

    xs, residuals, status = _iterate(space, problem.map, problem.start, tol, max_iter)
    fix_res = space.d(xs[-1], problem.map(xs[-1])) - a
    d01 = residuals[0] + a
    envelope = [phi(k ** n, d01) - a + tol for n in range(len(residuals))]
    env_ok = all(e <= bound for e, bound in zip(residuals, envelope))
    return IterationReport(
        xs, residuals, fix_res, status, tol, max_iter, "k-phi",
        envelope=envelope, envelope_holds=env_ok, contraction=contraction,
        kappa=kappa, regime=regime, warnings=warnings,
    )


def alpha_psi_solve(
    problem: FixedPointProblem,
    tol: float = 1e-10,
    max_iter: int = 1000,
    pattern: IntegerPattern = LIFO,
) -> IterationReport:
    """Picard iteration for an α-admissible α-ψ contraction.

    Requires ``α(x_0, T x_0) >= 1`` and checks ``α(x_n, x_{n+1}) >= 1`` along
    the orbit.  No uniqueness claim is made in this mode.
    """
    problem.validate()
    if problem.alpha is None:
        raise ProblemError("alpha_psi_solve needs (alpha, psi)")
    if not tol > 0 or max_iter < 1:
        raise ParameterError("tol must be > 0 and max_iter >= 1")
    space, alpha, mapping = problem.space, problem.alpha, problem.map
    a = space.base
    x0 = problem.start
    first = float(alpha(x0, mapping(x0)))
    if not first >= 1:
        raise AdmissibilityError(f"precondition alpha(x_0, T x_0) = {first} < 1", step=0)
    trace: list[float] = []

    def record(n, x, y):
        val = float(alpha(x, y))
        trace.append(val)
        if not val >= 1:
            raise AdmissibilityError(f"alpha(x_{n}, x_{n + 1}) = {val} < 1 breaks admissibility", step=n)

    xs, residuals, status = _iterate(space, mapping, x0, tol, max_iter, on_step=record)
    x_star = xs[-1]
    fix_res = space.d(x_star, mapping(x_star)) - a
    # triangle bound through the last iterate: d(x*, Tx*) <= ω(d(x*, x_n), d(x_n, Tx*))
    prev = xs[-2] if len(xs) > 1 else x_star
    bound = space.omega(space.d(x_star, prev), space.d(prev, mapping(x_star))) - a
    return IterationReport(
        xs, residuals, fix_res, status, tol, max_iter, "alpha-psi",
        alpha_trace=trace, residual_bound=bound, regime=f"pattern {pattern.name}",
    )


@dataclass
class UniquenessProbe:
    agree: bool
    status: str  # agree | disagree | inconclusive
    limits: list
    statuses: list
    max_deviation: float
    conditions_passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "agree": self.agree,
            "status": self.status,
            "limits": list(self.limits),
            "statuses": list(self.statuses),
            "max_deviation": self.max_deviation,
            "uniqueness_conditions_passed": self.conditions_passed,
            "tol": self.tol,
        }


def uniqueness_probe(
    problem: FixedPointProblem, starts: Sequence, tol: float = 1e-10, max_iter: int = 1000
) -> UniquenessProbe:
    """Run Picard from every start; agree iff all limits are within
    ``|d(l_i, l_j) - a| < 3 tol`` of each other."""
    if not starts:
        raise ParameterError("need at least one start")
    space = problem.space
    cond = check_uniqueness_conditions(space.omega, space.interval)
    kappa = estimate_kappa(problem.phi, space) if problem.phi is not None else None
    runs = [picard(problem.with_start(x), tol, max_iter, kappa=kappa, check_contraction=False) for x in starts]
    limits = [r.fixed_point for r in runs]
    statuses = [r.status for r in runs]
    a = space.base
    dev = max((abs(space.d(x, y) - a) for x, y in itertools.combinations(limits, 2)), default=0.0)
    if any(s != "converged" for s in statuses):
        return UniquenessProbe(False, "inconclusive", limits, statuses, dev, cond.passed, tol)
    agree = dev < 3 * tol
    return UniquenessProbe(agree, "agree" if agree else "disagree", limits, statuses, dev, cond.passed, tol)
