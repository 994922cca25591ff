import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reqslice.expr import (
    DivisionByZero,
    ExprError,
    UnknownSignal,
    is_boolean,
    parse_expr,
    robustness,
    robustness_series,
    signals,
    unparse,
)

from exprgen import brute, random_bool, random_trace


def test_le_example():
    assert robustness(parse_expr("x <= 5"), {"x": [3.0]}, 0) == 2.0


def test_conjunction_at_boundary_is_zero():
    e = parse_expr("x <= 5 && x >= 5")
    assert robustness(e, {"x": [5.0]}, 0) == 0.0


@pytest.mark.parametrize(
    "src,x,expected",
    [
        ("x < 1", 0.25, 0.75),
        ("x >= 1", 0.25, -0.75),
        ("x > 1", 3.0, 2.0),
        ("!(x > 1)", 3.0, -2.0),
        ("x == 2", 2.0, 1e-6),
        ("x <= 1 || x >= 3", 3.5, 0.5),
        ("x <= 1 || x >= 3", 2.5, -0.5),
        ("abs(x - 4) * 2 <= 1", 4.25, 0.5),
        ("-x >= 1", -3.0, 2.0),
    ],
)
def test_robustness_table(src, x, expected):
    assert robustness(parse_expr(src), {"x": [x]}, 0) == pytest.approx(expected, abs=1e-12)


def test_precedence():
    assert unparse(parse_expr("a + b * c <= d || e > 1 && f < 2")) == \
        "(((a + (b * c)) <= d) || ((e > 1.0) && (f < 2.0)))"


def test_signals():
    assert signals(parse_expr("reset >= 0.5 && BL <= ic && ic <= TL")) == {"reset", "BL", "ic", "TL"}


@pytest.mark.parametrize("bad", ["x <=", "x && 1", "!(x)", "(x <= 1", "x <= 1 <= 2", "x $ 2", "abs x"])
def test_parse_errors(bad):
    with pytest.raises(ExprError):
        parse_expr(bad)


def test_arith_is_not_boolean():
    assert not is_boolean(parse_expr("x + 1"))
    assert is_boolean(parse_expr("!(x < 1)"))


def test_unknown_signal():
    with pytest.raises(UnknownSignal):
        robustness(parse_expr("q <= 1"), {"x": [0.0]}, 0)


def test_division_by_zero():
    with pytest.raises(DivisionByZero):
        robustness(parse_expr("x / y <= 1"), {"x": [1.0], "y": [0.0]}, 0)


def test_series_matches_pointwise():
    e = parse_expr("abs(x - y) <= 1 || z > 0")
    rng = np.random.default_rng(3)
    tr = random_trace(rng, 20)
    series = robustness_series(e, tr)
    assert series.shape == (20,)
    assert all(series[k] == robustness(e, tr, k) for k in range(20))


def test_constant_expression_broadcasts():
    assert robustness_series(parse_expr("1 <= 2"), {"x": np.zeros(4)}).shape == ()  # no signal to size from
    assert robustness_series(parse_expr("x <= x + 1"), {"x": np.zeros(4)}).tolist() == [1.0] * 4


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sign_agrees_with_boolean_oracle(seed):
    rng = np.random.default_rng(seed)
    src, py = random_bool(rng)
    e = parse_expr(src)
    tr = random_trace(rng, 4)
    for k in range(4):
        v = robustness(e, tr, k)
        if abs(v) < 1e-9:
            continue
        assert (v > 0) == brute(py, tr, k), (src, k, v)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_unparse_roundtrip(seed):
    src, _ = random_bool(np.random.default_rng(seed))
    e = parse_expr(src)
    assert parse_expr(unparse(e)) == e
