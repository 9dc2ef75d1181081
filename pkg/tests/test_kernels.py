import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ometric import _kernels_py
from ometric.patterns import enumerate_trees, left_comb, right_comb

from conftest import BACKENDS

KINDS = [(_kernels_py.KIND_AFFINE, 1.0, 2.0), (_kernels_py.KIND_MAX, 0.0, 0.0), (_kernels_py.KIND_POWPROD, 1.5, 0.0)]


@pytest.mark.parametrize("kind,p,q", KINDS)
def test_eval_postfix_matches_reference(kern, kind, p, q):
    vals = np.array([1.5, 2.0, 0.5, 3.0, 1.25])
    for tree in enumerate_trees(5):
        got, fail = kern.eval_postfix(tree.postfix(), vals, kind, p, q)
        ref, _ = _kernels_py.eval_postfix(tree.postfix().tolist(), vals.tolist(), kind, p, q)
        assert fail == -1
        assert got == pytest.approx(ref, rel=1e-14)


def test_eval_postfix_reports_first_escape(kern):
    tree = right_comb(3)  # postfix: 0 1 2 -1 -1
    value, fail = kern.eval_postfix(tree.postfix(), [0.5, 0.5, 0.5], 0, 1.0, 1.0, 0.0, 0.9, True, True, True, 0.0)
    assert fail == 3
    assert value == 1.0


def test_unknown_kind_rejected(kern):
    with pytest.raises(ValueError):
        kern.eval_postfix(np.array([0]), [1.0], 7, 0.0, 0.0)


def test_eval_windows(kern):
    tree = left_comb(3)
    terms = [float(j) for j in range(10)]
    out = kern.eval_windows(tree.postfix(), terms, 2, 4, 0, 1.0, 1.0)
    assert out == [2 + 3 + 4, 3 + 4 + 5, 4 + 5 + 6, 5 + 6 + 7]


def test_eval_many_rows(kern):
    trees = enumerate_trees(4)
    progs = np.stack([t.postfix() for t in trees])
    assert list(kern.eval_postfix_many(progs, [0.0, 1.0, 2.0, 3.0], 0, 1.0, 2.0)) == [34, 22, 18, 16, 12]


def test_powprod_overflow_is_inf(kern):
    value, _ = kern.eval_postfix(np.array([0, 1, -1]), [1e200, 1e200], _kernels_py.KIND_POWPROD, 2.0, 0.0)
    assert math.isinf(value)


@given(
    st.floats(1.0, 4.0),
    st.lists(st.floats(0.0, 10.0), min_size=2, max_size=25),
)
def test_backends_agree_on_closed_forms(s, terms):
    results = [(m.lifo_sum(s, terms), m.fifo_sum(s, terms), m.pow2_exact_sum(s, terms)) for m in BACKENDS]
    for other in results[1:]:
        for x, y in zip(results[0], other):
            assert x == pytest.approx(y, rel=1e-13, abs=1e-300)


@given(st.integers(2, 5000))
def test_backends_agree_on_binary_split(n):
    outs = [(tuple(m.binary_split_seq(n)[0]), tuple(m.binary_split_seq(n)[1]), tuple(m.binary_split_mask(n))) for m in BACKENDS]
    assert all(o == outs[0] for o in outs)
