import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ometric.errors import (
    ConfigError,
    ConstructionError,
    DomainError,
    NotMetrizableError,
    OrientationError,
    ParameterError,
)
from ometric.spaces import (
    CATALOG,
    Flag,
    Interval,
    OMetricSpace,
    OmegaOp,
    Orientation,
    check_omega_flags,
    load_space_config,
    make_builtin,
    metrize,
    omega_scaled_sum,
    omega_sum,
    parse_omega,
    upwardize,
    verify_axioms,
)


def test_interval_invariants():
    iv = Interval(0.0, 1.0, True, False, 0.0)
    assert iv.contains(0.0) and not iv.contains(1.0)
    assert iv.describe() == "[0, 1)"
    with pytest.raises(ParameterError):
        Interval(-1.0, 1.0)
    with pytest.raises(ParameterError):
        Interval(0.0, 1.0, True, False, 1.0)  # base on the open end
    assert all(iv.contains(u) for u in iv.grid())


def test_builtin_requires_valid_s():
    with pytest.raises(ParameterError):
        make_builtin("b_metric", s=0.5)
    with pytest.raises(ParameterError):
        make_builtin("b_metric")
    with pytest.raises(ParameterError):
        make_builtin("nope")
    with pytest.raises(ParameterError):
        make_builtin("b_metric", s=2, carrier="example_2_1")


def test_b_metric_declares_paper_construction():
    sp = make_builtin("b_metric", s=3)
    assert sp.base == 0 and sp.orientation is Orientation.UPWARD
    assert sp.omega(1.0, 2.0) == 9.0


def test_example_21_table():
    sp = make_builtin("b_metric", s=4, carrier="example_2_1", size=50)
    assert sp.d(1.0, 1 / 3) == 4.0
    assert sp.d(0.0, 1.0) == 1.0
    assert sp.d(1 / 2, 1 / 4) == pytest.approx(0.25)
    report = verify_axioms(sp, [0.0, 1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5, 1 / 6])
    assert report.passed, report.failures()
    with pytest.raises(DomainError):
        sp.d(0.7, 0.0)


def test_example_21_is_not_a_b_metric_for_small_s():
    # the defining table needs s >= 4: d(1/3, 1/5) = 4 vs d(1/3, 1/2) + d(1/2, 1/5)
    sp = make_builtin("b_metric", s=4, carrier="example_2_1", size=10)
    lhs = sp.d(1 / 3, 1 / 5)
    mid = sp.d(1 / 3, 0.0) + sp.d(0.0, 1 / 5)
    assert lhs == 4 and mid == 8  # ratio 1/2, fine for any s >= 1
    lhs2 = sp.d(1 / 3, 1 / 5)
    via_even = sp.d(1 / 3, 1 / 2) + sp.d(1 / 2, 1 / 5)
    assert lhs2 <= 4 * via_even


def test_metric_identity_on_samples():
    sp = make_builtin("metric")
    for x in sp.sample_points(20, 3):
        assert sp.d(x, x) == 0.0


def test_aims_distance_value():
    assert make_builtin("aims").d(0.5, 1 / 3) == pytest.approx(12 / 13, rel=1e-15)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_axioms_hold_on_random_samples(name):
    params = {"s": 2} if name in ("b_metric", "b_multiplicative") else {}
    report = verify_axioms(make_builtin(name, params), n_samples=10, seed=11)
    assert report.axioms_passed, [f.to_dict() for f in report.failures()]


def test_ultra_axioms():
    assert verify_axioms(make_builtin("ultra"), [0.0, 1.0, 2.0]).passed


def test_aims_triangle_sample():
    report = verify_axioms(make_builtin("aims"), [1 / 2, 1 / 3, 1 / 5])
    assert report.triangle.passed and report.passed


def test_tampered_distance_fails_containment():
    sp = make_builtin("metric")
    bad = OMetricSpace("tampered", sp.domain, lambda x, y: -abs(x - y), sp.omega, sp.interval)
    report = verify_axioms(bad, [0.0, 1.0, 2.0])
    assert not report.containment.passed
    assert report.containment.witness[2] < 0


def test_olala_identity_counterexample():
    # d(1, -1) = |1 * -1| = 1 = a although the points differ
    report = verify_axioms(make_builtin("olala"), [1.0, -1.0, 0.5])
    assert not report.identity.passed
    assert report.identity.witness[:2] == [1.0, -1.0]


def test_domain_escape_is_reported_not_raised():
    sp = make_builtin("metric")
    report = verify_axioms(sp, [0.0, "x"])
    assert not report.containment.passed


def test_declared_flags_spot_checked():
    sp = make_builtin("log_metric")
    flags = check_omega_flags(sp.omega, sp.interval, [0.0, 0.5, 1.0, 2.0])
    assert "associative" not in flags  # declared false, so not claimed
    assert flags["symmetric"].passed and flags["nondecreasing_each_var"].passed


# --- upwardize -----------------------------------------------------------


def test_upwardize_olala_matches_remark():
    up = upwardize(make_builtin("olala"))
    assert up.orientation is Orientation.UPWARD
    for x, y in [(0.5, 0.3), (-0.2, 0.9), (1.0, -0.5)]:
        assert up.d(x, y) == pytest.approx(2 - abs(x * y))
    assert up.d(0.4, 0.4) == 1.0
    assert not up.omega_verified  # 2a - u leaves [0, 1]; masked operation


def test_upwardize_love_downward():
    up = upwardize(make_builtin("love_downward"))
    assert up.d(0, 1) == pytest.approx(2 - math.exp(-1))


def test_upwardize_upward_space_is_pointwise_equal():
    sp = make_builtin("multiplicative")
    up = upwardize(sp)
    for x, y in [(0.0, 1.0), (-2.0, 0.5)]:
        assert up.d(x, y) == sp.d(x, y)
    assert up.omega is sp.omega


def test_upwardize_is_idempotent():
    once = upwardize(make_builtin("piecewise_exotic"))
    twice = upwardize(once)
    pts = once.sample_points(8, 2)
    for x in pts:
        for y in pts:
            assert once.d(x, y) == twice.d(x, y)


def test_upwardize_exact_xi_when_reflection_stays_inside():
    # a = 1 on (0, inf): 2a - u stays inside for u in [1, 2)
    sp = make_builtin("piecewise_exotic")
    up = upwardize(sp, samples=[1.0, 1.25, 1.5, 1.9])
    assert up.omega_verified
    u, v = 1.5, 1.25
    expect = max(sp.omega(u, v), sp.omega(u, 2 - v), sp.omega(2 - u, v), sp.omega(2 - u, 2 - v), 2.0)
    assert up.omega(u, v) == expect


def test_upwardize_accepts_replacement():
    sp = make_builtin("olala")
    chi = parse_omega("2*(u+v-1) - u*v")
    up = upwardize(sp, replacement=chi)
    assert up.omega is chi and not up.omega_verified
    report = verify_axioms(up, [0.5, 0.3, -0.7, 0.9, 0.0])
    assert report.triangle.passed


def test_upwardize_widens_interval_when_xi_escapes():
    up = upwardize(make_builtin("olala"))
    assert up.interval.upper == math.inf and up.interval.lower == 1.0


def test_upwardize_construction_error():
    sp = make_builtin("olala")
    broken = OMetricSpace(
        "broken", sp.domain, sp.dist, OmegaOp(lambda u, v: math.nan, "nan"), sp.interval, Orientation.DOWNWARD
    )
    with pytest.raises(ConstructionError):
        upwardize(broken)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(1e-3, 2))
def test_ball_membership_preserved(x, y, r):
    sp = make_builtin("olala")
    up = upwardize(sp)
    assert (abs(sp.d(x, y) - 1) < r) == (abs(up.d(x, y) - 1) < r)


def test_ball_membership_thousand_draws():
    rng = random.Random(5)
    for name in ("love_downward", "olala", "piecewise_exotic"):
        sp = make_builtin(name)
        up = upwardize(sp)
        for _ in range(1000):
            x, y = sp.domain.sample(rng, 2)
            r = rng.uniform(1e-3, 3)
            assert (abs(sp.d(x, y) - sp.base) < r) == (abs(up.d(x, y) - up.base) < r)


# --- metrize -------------------------------------------------------------


def test_metrize_multiplicative_with_ln():
    sp = make_builtin("multiplicative")
    met = metrize(sp, math.log, math.exp)
    assert met.base == 0.0 and met.omega.name == "u+v"
    assert met.d(0.5, 2.0) == pytest.approx(1.5)
    assert verify_axioms(met, [0.0, 0.5, 2.0, -1.0]).passed


def test_metrize_metric_with_identity():
    sp = make_builtin("metric")
    met = metrize(sp, lambda t: t, lambda t: t)
    for x, y in [(0.0, 3.0), (1.5, -2.0)]:
        assert met.d(x, y) == sp.d(x, y)


def test_metrize_b_metric_witness():
    sp = make_builtin("b_metric", s=2)
    with pytest.raises(NotMetrizableError) as info:
        metrize(sp, lambda t: t, lambda t: t, grid=[1.0])
    lhs, rhs = info.value.witness[2:]
    assert info.value.witness[:2] == [1.0, 1.0] and lhs == 4.0 and rhs == 2.0


def test_metrize_needs_upward():
    with pytest.raises(OrientationError):
        metrize(make_builtin("olala"), lambda t: t, lambda t: t)


# --- configs -------------------------------------------------------------


def test_config_builtin_and_custom():
    sp = load_space_config({"name": "b_metric", "params": {"s": 2}})
    assert sp.omega(1, 1) == 4
    custom = load_space_config(
        {"custom": {"a": 0, "interval": {"lower": 0, "upper": "inf"}, "omega": "u+v",
                    "dist": "abs(x-y)", "orientation": "upward"}}
    )
    assert custom.omega.kernel is not None
    assert verify_axioms(custom, [0.0, 1.0, 2.5]).passed


def test_config_table_distance():
    doc = {"custom": {"a": 0, "omega": "max", "dist": {"points": ["p", "q"], "table": [[0, 1], [1, 0]]}}}
    sp = load_space_config(doc)
    assert sp.d("p", "q") == 1.0
    assert verify_axioms(sp, ["p", "q"]).passed


@pytest.mark.parametrize(
    "doc,field",
    [
        ({"name": "nope"}, "name"),
        ({"name": "b_metric", "params": {"s": 0}}, "params"),
        ({"custom": {"a": 0, "omega": "u+", "dist": "abs(x-y)"}}, "custom.omega"),
        ({"custom": {"a": 0, "omega": "u+v"}}, "custom.dist"),
        ({"custom": {"a": 0, "omega": "u+v", "dist": "abs(x-z)"}}, "custom.dist"),
        ({"custom": {"a": 0, "omega": "u+v", "dist": {"points": [1], "table": [[0, 1]]}}}, "custom.dist.table"),
        ({"custom": {"a": 0, "omega": "u+v", "dist": "abs(x-y)", "orientation": "sideways"}}, "custom.orientation"),
        ({"custom": {"a": 2, "interval": {"lower": 0, "upper": 1}, "omega": "u+v", "dist": "abs(x-y)"}}, "custom.interval"),
        ([], "config"),
    ],
)
def test_config_errors_name_field(doc, field):
    with pytest.raises(ConfigError) as info:
        load_space_config(doc)
    assert info.value.field == field


def test_parse_omega_builtins():
    assert parse_omega("2*(u+v)").kernel == omega_scaled_sum(2).kernel
    assert parse_omega("u+v").kernel == omega_sum().kernel
    assert parse_omega("max(u,v)").name == "max"
    assert parse_omega("scaled_sum:3")(1, 1) == 6
    w = parse_omega("u/v")
    assert w.kernel is None and w.symmetric is Flag.UNKNOWN
