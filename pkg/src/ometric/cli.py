"""Command-line front end: ``ometric <subcommand> [options]``.

Exit codes: 0 success, 1 negative verdict (axiom failed, inequality violated,
no convergence), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from typing import Sequence

from . import __version__
from .contraction import PsiFunction, TreeFamily, cphi_probe, make_phi, omega_scale
from .errors import (
    AdmissibilityError,
    ConfigError,
    OMetricError,
    ParameterError,
    PatternError,
    ProblemError,
    RangeError,
)
from .expr import ExpressionError, compile_expr
from .patterns import catalan, enumerate_trees, evaluate_tree, parse_tree, pattern_by_name
from .reports import dumps, envelope, to_csv
from .series import (
    COEFF_VARIANTS,
    OmegaSeries,
    binary_split,
    bmetric_polygon_coeffs,
    coefficient_check,
    fifo_closed_form,
    lifo_closed_form,
    partial_compositions,
    polygon_check,
    pow2_bound,
    pow2_exact,
    probe_composable,
)
from .solver import FixedPointProblem, alpha_psi_solve, picard, uniqueness_probe
from .spaces import load_space_config, make_builtin, parse_omega, verify_axioms
from .topology import SequenceSpec, is_cauchy, o_converges

GRAMMAR_HELP = """\
expression grammar:
  numbers, + - * /, ^ or ** (right associative), parentheses
  functions: abs, exp, ln, max(a, b, ...), min(a, b, ...); constants: pi, e
  variables: u, v for omega; x, y for dist; x for maps; n for sequences and
  series terms; t for psi; x, y for alpha

omega may also be a built-in id: sum, max, product, scaled_sum:S,
affine:P,Q, pow_product:S

space configs (--config, a path or inline JSON):
  {"name": "b_metric", "params": {"s": 2}}
  {"custom": {"a": 0, "interval": {"lower": 0, "upper": "inf"},
              "omega": "u+v", "dist": "abs(x-y)", "orientation": "upward"}}
"""

USAGE_ERRORS = (ConfigError, ParameterError, RangeError, PatternError, ProblemError, ExpressionError)


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument helpers


def _scalar(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _params(pairs: Sequence[str] | None) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError("--param", f"expected key=value, got {item!r}")
        out[key.strip()] = _scalar(value.strip())
    return out


def _number(text: str, field: str) -> float:
    try:
        return float(compile_expr(text, ())())
    except ExpressionError as exc:
        raise ConfigError(field, str(exc)) from None


def _numbers(text: str | None, field: str) -> list[float] | None:
    if text is None:
        return None
    items = [p for p in text.split(",") if p.strip()]
    if not items:
        raise ConfigError(field, "expected a comma-separated list of numbers")
    return [_number(p, field) for p in items]


def _load_config(text: str) -> dict:
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            raw = fh.read()
    else:
        raw = text
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"not a readable file or valid JSON ({exc.msg})") from None


def _space(args):
    if getattr(args, "config", None):
        if args.space:
            raise ConfigError("--config", "give either --space or --config, not both")
        return load_space_config(_load_config(args.config))
    if not args.space:
        raise ConfigError("--space", "required (or use --config)")
    try:
        return make_builtin(args.space, _params(args.param))
    except ParameterError as exc:
        raise ConfigError("--space" if "unknown space" in str(exc) else "--param", str(exc)) from None


def _omega(text: str, field: str = "--omega"):
    try:
        return parse_omega(text)
    except (ExpressionError, ValueError, TypeError) as exc:
        raise ConfigError(field, str(exc)) from None


def _expr(text: str, variables, field: str):
    try:
        return compile_expr(text, variables)
    except ExpressionError as exc:
        raise ConfigError(field, str(exc)) from None


def _point(space, x):
    """Snap a parsed number onto a finite domain's label when one matches."""
    dom = space.domain
    return dom.resolve(x) if dom.contains(x) else x


# --------------------------------------------------------------------------
# subcommands: each returns (exit_code, payload, csv_header, csv_rows)


def cmd_verify_axioms(args):
    space = _space(args)
    samples = _numbers(args.samples, "--samples")
    report = verify_axioms(space, samples, tol=args.tol, n_samples=args.n_samples, seed=args.seed)
    payload = {"space": space.summary(), "seed": args.seed, "report": report.to_dict()}
    rows = []
    for r in (report.containment, report.identity, report.symmetry, report.triangle, *report.omega_flags.values()):
        rows.append([r.name, r.passed, r.checked, json.dumps(r.witness), r.detail])
    return (0 if report.passed else 1), payload, ["check", "passed", "checked", "witness", "detail"], rows


def cmd_enumerate_trees(args):
    if args.leaves < 1:
        raise ConfigError("--leaves", "must be >= 1")
    trees = enumerate_trees(args.leaves)
    omega = _omega(args.omega)
    values = _numbers(args.values, "--values")
    if values is not None and len(values) != args.leaves:
        raise ConfigError("--values", f"expected {args.leaves} values, got {len(values)}")
    listing = []
    rows = []
    for k, tree in enumerate(trees, start=1):
        entry = {"index": k, "tree": tree.to_string()}
        if values is not None:
            entry["value"] = evaluate_tree(tree, omega, values)
        listing.append(entry)
        rows.append([k, entry["tree"], entry.get("value")])
    payload = {
        "leaves": args.leaves,
        "omega": omega.name,
        "values": values,
        "count": len(trees),
        "catalan": catalan(args.leaves - 1),
        "trees": listing,
    }
    if values is not None:
        payload["distinct_values"] = sorted({e["value"] for e in listing}, reverse=True)
    return 0, payload, ["index", "tree", "value"], rows


def cmd_eval_series(args):
    omega = _omega(args.omega)
    term = _expr(args.terms, ("n",), "--terms")
    try:
        pattern = pattern_by_name(args.pattern)
    except ParameterError as exc:
        raise ConfigError("--pattern", str(exc)) from None
    series = OmegaSeries(lambda i: term(i), omega, pattern, args.terms)
    verdict = probe_composable(series, args.tol, args.horizon)
    values = partial_compositions(series, args.horizon)
    payload = {
        "omega": omega.name,
        "terms": args.terms,
        "pattern": pattern.name,
        "verdict": verdict.to_dict(),
        "partial_compositions": values,
    }
    closed = _closed_form_block(omega, pattern, series, values)
    if closed is not None:
        payload["closed_form"] = closed
    return 0, payload, ["n", "omega_n"], list(enumerate(values))


def _closed_form_block(omega, pattern, series, values):
    """Closed form of the last partial composition when ω = s(u + v)."""
    s = omega_scale(omega)
    n = len(values) - 1
    if s is None or s < 1 or n < 1 or pattern.name not in ("lifo", "fifo", "pow2"):
        return None
    terms = series.values(n)
    out = {"s": s, "n": n, "tree_value": values[-1]}
    if pattern.name == "lifo":
        out["value"] = lifo_closed_form(s, terms)
    elif pattern.name == "fifo":
        out["value"] = fifo_closed_form(s, terms)
    else:
        out["value"] = pow2_exact(s, terms)
        out["pow2_bound"] = pow2_bound(s, terms)
        out["binary_split"] = binary_split(n + 1).to_dict()
    return out


def cmd_polygon_check(args):
    space = _space(args)
    points = _numbers(args.points, "--points")
    if points is not None:
        tuples = [[_point(space, x) for x in points]]
    else:
        if args.size < 3:
            raise ConfigError("--size", "a tuple needs at least 3 points")
        tuples = []
        for k in range(args.tuples):
            tuples.append(space.sample_points(args.size, args.seed * 100003 + k))
    variants = []
    if args.coefficients:
        variants = list(COEFF_VARIANTS) if args.coefficients == "all" else args.coefficients.split(",")
        if space.name != "b_metric":
            raise ConfigError("--coefficients", "coefficient vectors apply to the b_metric space only")
        for v in variants:
            if v not in COEFF_VARIANTS:
                raise ConfigError("--coefficients", f"unknown variant {v!r}")
    fixed_tree = parse_tree(args.tree) if args.tree else None

    results, violations, rows = [], [], []
    min_slack = math.inf
    checked = 0
    for k, pts in enumerate(tuples):
        leaves = len(pts) - 1
        trees = [fixed_tree] if fixed_tree is not None else enumerate_trees(leaves)
        for tree in trees:
            rep = polygon_check(space, pts, tree, args.tol, strict=False)
            checked += 1
            entry = {"tuple": k, "points": list(pts), **rep.to_dict()}
            if rep.slack == rep.slack:
                min_slack = min(min_slack, rep.slack)
            if points is not None:
                results.append(entry)
            if not rep.holds:
                violations.append(entry)
            rows.append([k, rep.tree, rep.lhs, rep.rhs, rep.slack, rep.holds])
        for v in variants:
            coeffs = bmetric_polygon_coeffs(float(space.params["s"]), leaves - 1, v)
            rep = coefficient_check(space, pts, coeffs, v, args.tol)
            checked += 1
            entry = {"tuple": k, "points": list(pts), **rep.to_dict()}
            min_slack = min(min_slack, rep.slack)
            if points is not None:
                results.append(entry)
            if not rep.holds:
                violations.append(entry)
            rows.append([k, v, rep.lhs, rep.rhs, rep.slack, rep.holds])
    payload = {
        "space": space.summary(),
        "seed": args.seed,
        "tuples": len(tuples),
        "checked": checked,
        "violation_count": len(violations),
        "min_slack": min_slack,
        "violations": violations[: args.max_witnesses],
    }
    if points is not None:
        payload["results"] = results
    return (1 if violations else 0), payload, ["tuple", "tree", "lhs", "rhs", "slack", "holds"], rows


def cmd_cphi_probe(args):
    try:
        phi = make_phi(args.phi, _params(args.phi_param))
    except ParameterError as exc:
        raise ConfigError("--phi", str(exc)) from None
    omega = _omega(args.omega)
    try:
        family = TreeFamily.parse(args.family)
    except (ParameterError, ValueError) as exc:
        raise ConfigError("--family", str(exc)) from None
    eps = phi.base + 1.0 if args.epsilon is None else _number(args.epsilon, "--epsilon")
    probe = cphi_probe(phi, omega, family, args.r, eps, args.n_max, args.i_max, args.tol)
    payload = {"phi": phi.name, "base": phi.base, "omega": omega.name, "probe": probe.to_dict()}
    return 0, payload, ["n", "i", "h_value"], probe.trace


def cmd_fixed_point(args):
    space = _space(args)
    fmap = _expr(args.map, ("x",), "--map")
    start = _number(args.start, "--start")
    if args.phi and args.alpha:
        raise ConfigError("--alpha", "give either --phi/--k or --alpha/--psi")
    if args.alpha:
        alpha = _expr(args.alpha, ("x", "y"), "--alpha")
        if not args.psi:
            raise ConfigError("--psi", "required with --alpha")
        psi_fn = _expr(args.psi, ("t",), "--psi")
        psi = PsiFunction(psi_fn, space.base, args.psi)
        problem = FixedPointProblem(space, fmap, start, alpha=lambda x, y: alpha(x, y), psi=psi)
        try:
            report = alpha_psi_solve(problem, args.tol, args.max_iter, pattern_by_name(args.pattern))
        except AdmissibilityError as exc:
            payload = {"space": space.summary(), "map": args.map, "error": str(exc), "step": exc.step}
            return 1, payload, ["error"], [[str(exc)]]
        payload = {"space": space.summary(), "map": args.map, "alpha": args.alpha, "psi": args.psi,
                   "report": report.to_dict()}
    else:
        if not args.phi or args.k is None:
            raise ConfigError("--phi", "give --phi and --k (or --alpha and --psi)")
        try:
            phi = make_phi(args.phi, _params(args.phi_param))
        except ParameterError as exc:
            raise ConfigError("--phi", str(exc)) from None
        problem = FixedPointProblem(space, fmap, start, phi=phi, k=args.k)
        report = picard(problem, args.tol, args.max_iter, kappa=args.kappa)
        payload = {"space": space.summary(), "map": args.map, "phi": phi.name, "k": args.k,
                   "report": report.to_dict()}
        starts = _numbers(args.starts, "--starts")
        if starts:
            probe = uniqueness_probe(problem, starts, args.tol, args.max_iter)
            payload["uniqueness"] = probe.to_dict()
    rows = []
    for n, res in enumerate(report.step_residuals):
        x = report.iterates[n] if n < len(report.iterates) else None
        alpha_val = report.alpha_trace[n] if report.alpha_trace and n < len(report.alpha_trace) else None
        rows.append([n, x, res, alpha_val])
    return (0 if report.converged else 1), payload, ["n", "x_n", "step_residual", "alpha"], rows


def cmd_cauchy_probe(args):
    space = _space(args)
    gen = _expr(args.seq, ("n",), "--seq")
    seq = SequenceSpec(lambda n: _point(space, gen(n)), args.seq)
    limits = [_number(v, "--limit") for v in (args.limit or [])]
    conv = []
    for lim in limits:
        verdict = o_converges(space, seq, _point(space, lim), args.tol, args.horizon)
        conv.append({"limit": lim, "converges": verdict.converges, "verdict": verdict.to_dict()})
    cauchy = is_cauchy(space, seq, args.tol, args.horizon)
    payload = {
        "space": space.summary(),
        "sequence": args.seq,
        "o_convergence": conv,
        "cauchy": {"is_cauchy": cauchy.converges, "verdict": cauchy.to_dict()},
    }
    return 0, payload, ["n", "max_deviation"], cauchy.tail_residuals


COMMANDS = {
    "verify-axioms": cmd_verify_axioms,
    "enumerate-trees": cmd_enumerate_trees,
    "eval-series": cmd_eval_series,
    "polygon-check": cmd_polygon_check,
    "cphi-probe": cmd_cphi_probe,
    "fixed-point": cmd_fixed_point,
    "cauchy-probe": cmd_cauchy_probe,
}


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return x


def _positive_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=None, help="tolerance (> 0)")
    common.add_argument("--horizon", type=_positive_int, default=1000)
    common.add_argument("--max-iter", type=_positive_int, default=1000)
    common.add_argument("--seed", type=int, default=0, help="fixes all sampling (default 0)")
    common.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    space_opts = argparse.ArgumentParser(add_help=False)
    space_opts.add_argument("--space", help="catalog space name")
    space_opts.add_argument("--param", action="append", metavar="KEY=VALUE", help="space parameter, repeatable")
    space_opts.add_argument("--config", help="space config: JSON file path or inline JSON")

    parser = _Parser(
        prog="ometric",
        description="Toolkit for O-metric spaces: axioms, composition trees, ω-series, C_phi probes, fixed points.",
        epilog=GRAMMAR_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def add(name, help_text, parents):
        return sub.add_parser(
            name, help=help_text, description=help_text, parents=parents,
            epilog=GRAMMAR_HELP, formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    p = add("verify-axioms", "sampled check of the O-metric axioms", [common, space_opts])
    p.add_argument("--samples", help="comma-separated points (default: random draws)")
    p.add_argument("--n-samples", type=_positive_int, default=12)

    p = add("enumerate-trees", "list every parenthesization and its value", [common])
    p.add_argument("--leaves", type=int, required=True)
    p.add_argument("--omega", default="u+v")
    p.add_argument("--values", help="comma-separated leaf values")

    p = add("eval-series", "partial compositions of an ω-series and a convergence probe", [common])
    p.add_argument("--omega", default="u+v")
    p.add_argument("--terms", default="2^(-n)", help="term t_n as an expression in n (n from 0)")
    p.add_argument("--pattern", default="lifo", help="fifo, lifo, aiso or pow2")

    p = add("polygon-check", "check polygon ω-inequalities on point tuples", [common, space_opts])
    p.add_argument("--points", help="comma-separated x_0..x_{n+1}; default: random tuples")
    p.add_argument("--tree", help="canonical tree string; default: every tree")
    p.add_argument("--tuples", type=_positive_int, default=20)
    p.add_argument("--size", type=int, default=4, help="points per random tuple")
    p.add_argument("--coefficients", help="b_metric coefficient variants, comma-separated or 'all'")
    p.add_argument("--max-witnesses", type=int, default=20)

    p = add("cphi-probe", "probe the tail compositions h_{n,i}(r, epsilon)", [common])
    p.add_argument("--phi", required=True)
    p.add_argument("--phi-param", action="append", metavar="KEY=VALUE")
    p.add_argument("--omega", default="u+v")
    p.add_argument("--family", default="lifo", help="fifo, lifo, aiso, pow2, mixed or mixed:L")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--epsilon", help="default a + 1")
    p.add_argument("--n-max", type=_positive_int, default=120)
    p.add_argument("--i-max", type=int, default=120)

    p = add("fixed-point", "Picard iteration for k-phi or alpha-psi contractions", [common, space_opts])
    p.add_argument("--map", required=True, help="T(x) as an expression in x")
    p.add_argument("--start", required=True)
    p.add_argument("--phi")
    p.add_argument("--phi-param", action="append", metavar="KEY=VALUE")
    p.add_argument("--k", type=float)
    p.add_argument("--kappa", type=float, help="override the estimated sup C_phi")
    p.add_argument("--alpha", help="alpha(x, y) as an expression")
    p.add_argument("--psi", help="psi(t) as an expression")
    p.add_argument("--pattern", default="lifo")
    p.add_argument("--starts", help="comma-separated starts for the uniqueness probe")

    p = add("cauchy-probe", "O-convergence and Cauchy probes for a sequence", [common, space_opts])
    p.add_argument("--seq", required=True, help="x_n as an expression in n (n from 1)")
    p.add_argument("--limit", action="append", help="candidate limit, repeatable")
    return parser


_DEFAULT_TOL = {
    "verify-axioms": None,
    "enumerate-trees": None,
    "eval-series": 1e-9,
    "polygon-check": None,
    "cphi-probe": 1e-3,
    "fixed-point": 1e-10,
    "cauchy-probe": 1e-3,
}


def _write(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ometric: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        print("ometric: error: a command is required", file=sys.stderr)
        return 2
    if args.tol is None:
        args.tol = _DEFAULT_TOL[args.command]
    random.seed(args.seed)
    try:
        code, payload, header, rows = COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        print(f"ometric: error: {exc}", file=sys.stderr)
        return 2
    except OMetricError as exc:
        print(f"ometric: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.format == "csv":
        text = to_csv(header, rows)
    else:
        text = dumps(envelope(args.command, {"seed": args.seed, **payload} if "seed" not in payload else payload))
    try:
        _write(text, args.output)
    except OSError as exc:
        print(f"ometric: error: --output: {exc}", file=sys.stderr)
        return 2
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
