import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ometric.expr import ExpressionError, compile_expr


@pytest.mark.parametrize(
    "src,names,args,expected",
    [
        ("u+2*v", ("u", "v"), (1, 3), 7.0),
        ("-2^2", (), (), -4.0),
        ("2^3^2", (), (), 512.0),
        ("2**-1", (), (), 0.5),
        ("max(u, v, 7)", ("u", "v"), (1, 3), 7.0),
        ("min(u,v)", ("u", "v"), (1, 3), 1.0),
        ("abs(x-y)", ("x", "y"), (2, 5), 3.0),
        ("ln(e)", (), (), 1.0),
        ("exp(0)+pi-pi", (), (), 1.0),
        ("(u+1)*(v+1)", ("u", "v"), (1, 2), 6.0),
        ("1/n", ("n",), (4,), 0.25),
        (".5e1", (), (), 5.0),
    ],
)
def test_evaluates(src, names, args, expected):
    assert compile_expr(src, names)(*args) == pytest.approx(expected)


@pytest.mark.parametrize("src", ["u+", "(u", "u v", "foo(u)", "w", "max(u)", "abs(u, v)", "3 $ 4", ""])
def test_syntax_errors(src):
    with pytest.raises(ExpressionError):
        compile_expr(src)


@pytest.mark.parametrize("src,args", [("1/u", (0,)), ("ln(u)", (0,)), ("u^(-1)", (0,)), ("(-1)^0.5", ())])
def test_runtime_errors(src, args):
    fn = compile_expr(src, ("u",) if args else ())
    with pytest.raises(ExpressionError):
        fn(*args)


def test_exp_overflow_is_inf():
    assert compile_expr("exp(u)", ("u",))(1e4) == math.inf


def test_wrong_arity_call():
    with pytest.raises(TypeError):
        compile_expr("u+v")(1.0)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_matches_python_arithmetic(u, v):
    fn = compile_expr("3*u - v/2 + abs(u*v)")
    assert fn(u, v) == pytest.approx(3 * u - v / 2 + abs(u * v), rel=1e-12, abs=1e-12)
