import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ometric.errors import ParameterError, TreeDomainError
from ometric.patterns import FIFO, LIFO, POW2, AISO, affine_coefficients, enumerate_trees, left_comb, right_comb, tree_from_pattern
from ometric.series import (
    OmegaSeries,
    binary_split,
    bmetric_polygon_coeffs,
    ceil_log2,
    coefficient_check,
    fifo_closed_form,
    lifo_closed_form,
    partial_composition,
    partial_compositions,
    polygon_check,
    pow2_bound,
    pow2_exact,
    probe_composable,
    trace_csv,
)
from ometric.spaces import make_builtin, omega_scaled_sum, omega_sum

from conftest import naive_eval

term_lists = st.lists(st.floats(0, 100), min_size=2, max_size=40)
scales = st.floats(1, 3)


def lifo_sum_oracle(s, t):
    n = len(t) - 1
    return math.fsum(s ** (i + 1) * t[i] for i in range(n)) + s ** n * t[n]


def fifo_sum_oracle(s, t):
    n = len(t) - 1
    return s ** n * t[0] + math.fsum(s ** (n - j + 1) * t[j] for j in range(1, n + 1))


@given(scales, term_lists)
def test_lifo_closed_form(s, t):
    assert lifo_closed_form(s, t) == pytest.approx(lifo_sum_oracle(s, t), rel=1e-12, abs=1e-12)
    assert lifo_closed_form(s, t) == pytest.approx(naive_eval(right_comb(len(t)), omega_scaled_sum(s), t), rel=1e-12, abs=1e-12)


@given(scales, term_lists)
def test_fifo_closed_form(s, t):
    assert fifo_closed_form(s, t) == pytest.approx(fifo_sum_oracle(s, t), rel=1e-12, abs=1e-12)
    assert fifo_closed_form(s, t) == pytest.approx(naive_eval(left_comb(len(t)), omega_scaled_sum(s), t), rel=1e-12, abs=1e-12)


@given(scales, term_lists)
def test_pow2_exact_below_bound(s, t):
    exact = pow2_exact(s, t)
    assert exact == pytest.approx(naive_eval(tree_from_pattern(POW2, len(t)), omega_scaled_sum(s), t), rel=1e-12, abs=1e-12)
    assert exact <= pow2_bound(s, t) * (1 + 1e-12) + 1e-12


def test_closed_forms_reject_small_s():
    for fn in (lifo_closed_form, fifo_closed_form, pow2_bound, pow2_exact):
        with pytest.raises(ParameterError):
            fn(0.5, [1.0, 2.0])


@pytest.mark.parametrize("n,expected", [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (1024, 10), (1025, 11)])
def test_ceil_log2(n, expected):
    assert ceil_log2(n) == expected


def test_binary_split_reconstruction_exhaustive():
    for n in range(2, 5000):
        b = binary_split(n)
        assert b.reconstructs(), n
        assert b.matches_predecessor_digits(), n
        assert b.n_seq[0] == 0 and b.n_seq[-1] == n


def test_binary_split_example():
    b = binary_split(11)
    assert b.n_seq == (0, 8, 10, 11) and b.exponents() == (3, 1, 0)
    assert b.matches_binary_digits()
    even = binary_split(12)  # 8 + 2 + 1 + 1: the last bit repeats
    assert even.exponents() == (3, 1, 0, 0)
    assert even.reconstructs() and not even.matches_binary_digits()


def test_binary_split_blocks_are_powers_of_two():
    for n in (6, 37, 1000, 65535):
        b = binary_split(n)
        assert all(size & (size - 1) == 0 for size in b.block_sizes)


def test_geometric_series_composable():
    series = OmegaSeries(lambda i: 2.0 ** -i, omega_sum(), FIFO)
    verdict = probe_composable(series, tol=1e-9, horizon=200)
    assert verdict.converges and verdict.limit_estimate == pytest.approx(2.0)
    for pattern in (LIFO, AISO, POW2):
        assert partial_composition(OmegaSeries(series.terms, omega_sum(), pattern), 30) == pytest.approx(2 - 2.0 ** -30)


def test_scaled_lifo_series_diverges_by_overflow():
    series = OmegaSeries(lambda i: 1.0, omega_scaled_sum(2), FIFO)
    verdict = probe_composable(series, horizon=2000)
    assert verdict.status == "diverges" and verdict.overflow


def test_harmonic_series_not_composable():
    series = OmegaSeries(lambda i: 1.0 / (i + 1), omega_sum(), LIFO)
    assert not probe_composable(series, tol=1e-9, horizon=100).converges


def test_partial_compositions_match_single():
    series = OmegaSeries(lambda i: 1.0 / (i + 1) ** 2, omega_scaled_sum(1.1), AISO)
    many = partial_compositions(series, 20)
    assert many[7] == pytest.approx(partial_composition(series, 7), rel=1e-14)


def test_trace_csv():
    assert trace_csv([1.0, 0.5]) == "n,omega_n\n0,1\n1,0.5\n"


@pytest.mark.parametrize("s", [1.0, 1.5, 2.0])
@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_coefficient_variants_against_trees(s, n):
    assert bmetric_polygon_coeffs(s, n, "lifo") == pytest.approx(affine_coefficients(right_comb(n + 1), s, s))
    assert bmetric_polygon_coeffs(s, n, "fifo") == pytest.approx(affine_coefficients(left_comb(n + 1), s, s))
    lifo = bmetric_polygon_coeffs(s, n, "lifo")
    assert bmetric_polygon_coeffs(s, n, "mean_constant") == pytest.approx([sum(lifo) / len(lifo)] * (n + 1))
    pow2 = affine_coefficients(tree_from_pattern(POW2, n + 1), s, s)
    assert max(pow2) <= bmetric_polygon_coeffs(s, n, "pow2_constant")[0] * (1 + 1e-12)


def test_coefficient_variant_errors():
    with pytest.raises(ParameterError):
        bmetric_polygon_coeffs(2, 3, "zigzag")
    with pytest.raises(ParameterError):
        bmetric_polygon_coeffs(2, 0, "lifo")


def test_polygon_holds_for_b_metric_all_trees():
    space = make_builtin("b_metric", s=2)
    rng = random.Random(1)
    for _ in range(20):
        pts = [rng.uniform(-5, 5) for _ in range(6)]
        for tree in enumerate_trees(5):
            assert polygon_check(space, pts, tree).holds


def test_coefficient_check_b_metric():
    space = make_builtin("b_metric", s=2)
    pts = [0.0, 1.0, 2.0, 3.0]
    rep = coefficient_check(space, pts, bmetric_polygon_coeffs(2, 2, "lifo"), "lifo")
    assert rep.holds and rep.lhs == 9.0
    with pytest.raises(ParameterError):
        coefficient_check(space, pts, [1.0])


def test_polygon_strict_vs_lenient():
    space = make_builtin("olala")
    pts = [1.0, 0.1, 0.1, 0.1, 1.0]
    tree = left_comb(4)
    with pytest.raises(TreeDomainError):
        polygon_check(space, pts, tree)
    rep = polygon_check(space, pts, tree, strict=False)
    assert not rep.holds and rep.witness
    with pytest.raises(ParameterError):
        polygon_check(space, pts[:3], tree)


@pytest.mark.parametrize("name", ["olala", "love_downward"])
def test_polygon_holds_after_upwardize(name):
    from ometric.spaces import upwardize

    space = upwardize(make_builtin(name))
    rng = random.Random(3)
    for _ in range(30):
        pts = space.domain.sample(rng, 5)
        for tree in enumerate_trees(4):
            rep = polygon_check(space, pts, tree, tol=0.0, strict=False)
            assert rep.holds and not rep.error
