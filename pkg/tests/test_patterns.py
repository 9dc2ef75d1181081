import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ometric.errors import ParameterError, PatternError, RangeError, TreeDomainError
from ometric.patterns import (
    AISO,
    FIFO,
    LIFO,
    POW2,
    CompositionTree,
    IntegerPattern,
    Leaf,
    Node,
    affine_coefficients,
    catalan,
    enumerate_trees,
    evaluate_all,
    evaluate_tree,
    iter_trees,
    left_comb,
    parse_tree,
    pattern_by_name,
    right_comb,
    tree_from_pattern,
)
from ometric.spaces import Interval, omega_affine, omega_max, omega_pow_product, parse_omega

from conftest import naive_eval


def comb_catalan(n):
    return math.comb(2 * n, n) // (n + 1)


@pytest.mark.parametrize("n", range(0, 31))
def test_catalan_matches_binomial(n):
    assert catalan(n) == comb_catalan(n)


def test_catalan_range():
    with pytest.raises(RangeError):
        catalan(31)
    with pytest.raises(ParameterError):
        catalan(-1)


@pytest.mark.parametrize("leaves", range(1, 11))
def test_enumeration_counts_distinct(leaves):
    trees = enumerate_trees(leaves)
    assert len(trees) == comb_catalan(leaves - 1)
    assert len({t.to_string() for t in trees}) == len(trees)
    assert all(t.leaf_count == leaves for t in trees)


def test_enumeration_cap():
    with pytest.raises(RangeError):
        enumerate_trees(15)
    assert sum(1 for _ in iter_trees(12)) == comb_catalan(11)


def test_four_leaf_order_for_affine():
    omega = omega_affine(1, 2)
    assert evaluate_all(4, omega, [0, 1, 2, 3]) == [34.0, 22.0, 18.0, 16.0, 12.0]


def test_parse_roundtrip():
    for tree in enumerate_trees(6):
        assert parse_tree(tree.to_string()) == tree
    assert parse_tree("((1 2) 3)") == left_comb(3)
    assert parse_tree(" 3 ") == Leaf(3)
    assert parse_tree("(2 3)").first == 2


@pytest.mark.parametrize("text", ["(1 3)", "(2 4)", "(1 2", "1 2", "(1 (2 3) 4)", "", "(a b)"])
def test_parse_rejects(text):
    with pytest.raises(ParameterError):
        parse_tree(text)


def test_node_requires_consecutive():
    with pytest.raises(ParameterError):
        Node(Leaf(1), Leaf(3))
    t = Node(Node(Leaf(1), Leaf(2)), Leaf(3))
    assert t == left_comb(3) and t.depth() == 2 and t.last == 3


def test_structure_accessors():
    t = parse_tree("((1 2) (3 (4 5)))")
    assert t.left.to_string() == "(1 2)"
    assert t.right.to_string() == "(3 (4 5))"
    assert t.right.right.left.index == 4


def test_pattern_trees():
    assert tree_from_pattern(FIFO, 4) == left_comb(4)
    assert tree_from_pattern(LIFO, 4) == right_comb(4)
    assert tree_from_pattern(AISO, 5).to_string() == "(((1 2) 3) (4 5))"
    assert tree_from_pattern(POW2, 6).to_string() == "(((1 2) (3 4)) (5 6))"
    assert tree_from_pattern(LIFO, 1).is_leaf


def test_pattern_lookup_and_errors():
    assert pattern_by_name("AISO") is AISO
    with pytest.raises(ParameterError):
        pattern_by_name("zigzag")
    bad = IntegerPattern(lambda n: n, "bad")
    with pytest.raises(PatternError):
        tree_from_pattern(bad, 3)


def test_large_pattern_tree_is_iterative():
    t = tree_from_pattern(POW2, 100_000)
    assert t.leaf_count == 100_000
    assert evaluate_tree(t, omega_max(), [1.0] * 100_000) == 1.0


@st.composite
def trees(draw, max_leaves=9):
    n = draw(st.integers(1, max_leaves))
    rng = random.Random(draw(st.integers(0, 2**32)))
    return _random_tree(rng, 1, n)


def _random_tree(rng, first, n):
    if n == 1:
        return Leaf(first)
    k = rng.randint(1, n - 1)
    return Node(_random_tree(rng, first, k), _random_tree(rng, first + k, n - k))


@given(trees(), st.lists(st.floats(0, 10), min_size=9, max_size=9))
def test_evaluate_matches_recursion(tree, values):
    vals = values[: tree.leaf_count]
    for omega in (omega_affine(0.5, 1.5), omega_max(), omega_pow_product(0.5), parse_omega("u+v+u*v")):
        got = evaluate_tree(tree, omega, vals)
        assert got == pytest.approx(naive_eval(tree, omega, vals), rel=1e-12, abs=1e-12)


@given(trees())
def test_subtree_positions(tree):
    for pos in range(tree.leaf_count * 2 - 1):
        sub = tree.subtree_at(pos)
        assert sub.first >= tree.first and sub.last <= tree.last


@given(trees(), st.floats(0.1, 3), st.floats(0.1, 3))
def test_affine_coefficients_linear(tree, p, q):
    coeffs = affine_coefficients(tree, p, q)
    vals = [float(i + 1) for i in range(tree.leaf_count)]
    assert math.fsum(c * v for c, v in zip(coeffs, vals)) == pytest.approx(
        naive_eval(tree, omega_affine(p, q), vals), rel=1e-12
    )


def test_affine_coefficients_match_expected():
    # (1 (2 3)) with u + 2v: 1*t1 + 2*(t2 + 2*t3)
    assert affine_coefficients(parse_tree("(1 (2 3))"), 1, 2) == [1.0, 2.0, 4.0]


def test_interval_escape_names_subtree():
    iv = Interval(0.0, 1.0, True, True, 0.0)
    tree = parse_tree("((1 2) 3)")
    with pytest.raises(TreeDomainError) as info:
        evaluate_tree(tree, parse_omega("u+v"), [0.6, 0.6, 0.0], iv)
    assert info.value.subtree.to_string() == "(1 2)"
    assert info.value.value == pytest.approx(1.2)


def test_root_is_not_checked():
    iv = Interval(0.0, 1.0, True, True, 0.0)
    assert evaluate_tree(Node(Leaf(1), Leaf(2)), parse_omega("u+v"), [0.6, 0.6], iv) == pytest.approx(1.2)


def test_leaf_out_of_interval():
    iv = Interval(0.0, 1.0, True, True, 0.0)
    with pytest.raises(TreeDomainError):
        evaluate_tree(left_comb(2), parse_omega("u+v"), [2.0, 0.1], iv)


def test_python_only_operation():
    omega = parse_omega("u*v/(1+u)")
    assert omega.kernel is None
    t = tree_from_pattern(AISO, 7)
    vals = [0.5 * i for i in range(1, 8)]
    assert evaluate_tree(t, omega, vals) == pytest.approx(naive_eval(t, omega, vals))


def test_value_count_mismatch():
    with pytest.raises(ParameterError):
        evaluate_tree(left_comb(3), omega_max(), [1.0, 2.0])


def test_tree_equality_and_hash():
    a, b = CompositionTree(1, (1, 1)), right_comb(3)
    assert a == b and hash(a) == hash(b)
