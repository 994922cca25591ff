import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reqslice.model import Block, Connection, Model
from reqslice.simulate import AlgebraicLoop, NumericError, TestCase, TestCaseError, schedule, simulate

from conftest import chain


def test_schedule_chain():
    m = chain(("Gain", {"gain": 2}))
    assert [b.block_type for b in schedule(m)] == ["Inport", "Gain", "Outport"]


def _feedback(delay=True):
    # y = u + prev(y)
    blocks = [
        Block(1, "u", "Inport"),
        Block(2, "acc", "Sum", {"signs": "++"}),
        Block(3, "z", "UnitDelay", {"initial": 0.0}) if delay else Block(3, "g", "Gain", {"gain": 1.0}),
        Block(4, "y", "Outport"),
    ]
    conns = [Connection(1, 1, 2, 1), Connection(3, 1, 2, 2), Connection(2, 1, 3, 1), Connection(2, 1, 4, 1)]
    return Model("fb", 1.0, tuple(blocks), tuple(conns), {"u": (0.0, 1.0)})


def test_delay_breaks_loop():
    order = [b.sid for b in schedule(_feedback())]
    assert order.index(3) < order.index(2)
    tr = simulate(_feedback(), TestCase({"u": 1.0}, 5))
    np.testing.assert_array_equal(tr["y"], [1, 2, 3, 4, 5])


def test_algebraic_loop():
    with pytest.raises(AlgebraicLoop) as ei:
        schedule(_feedback(delay=False))
    assert set(ei.value.sids) >= {2, 3}


def test_saturation_clamp():
    m = chain(("Saturation", {"upper_limit": 5, "lower_limit": 0}))
    tr = simulate(m, TestCase({"u": 7.0}, 10))
    assert np.all(tr["y"] == 5.0)


def _switch_model():
    blocks = [
        Block(1, "a", "Inport"), Block(2, "c", "Inport"), Block(3, "b", "Inport"),
        Block(4, "sw", "Switch", {"threshold": 0.5}), Block(5, "y", "Outport"),
    ]
    conns = [Connection(1, 1, 4, 1), Connection(2, 1, 4, 2), Connection(3, 1, 4, 3), Connection(4, 1, 5, 1)]
    return Model("sw", 1.0, tuple(blocks), tuple(conns))


@pytest.mark.parametrize("ctrl,expected", [(1.0, "a"), (0.5, "a"), (0.0, "b")])
def test_switch_selection(ctrl, expected):
    a = np.linspace(0, 1, 8)
    b = -a - 3
    tr = simulate(_switch_model(), TestCase({"a": list(a), "c": ctrl, "b": list(b)}, 8))
    np.testing.assert_array_equal(tr["y"], a if expected == "a" else b)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.floats(-10, 10))
def test_unit_delay_identity(xs, init):
    m = chain(("UnitDelay", {"initial": init}))
    tr = simulate(m, TestCase({"u": xs}, len(xs)))
    assert tr["y"][0] == init
    np.testing.assert_array_equal(tr["y"][1:], xs[:-1])


def _trapezoid_oracle(u, T, steps):
    y, prev_x, prev_y, out = 0.0, 0.0, 0.0, []
    for k in range(steps):
        y = prev_y + T / 2 * (u[k] + prev_x)
        out.append(y)
        prev_x, prev_y = u[k], y
    return out


def test_tustin_integrator_matches_trapezoid(tustin):
    inputs = {"xin": 1.0, "TL": 10.0, "BL": -10.0, "reset": 0.0, "ic": 0.0}
    tr = simulate(tustin, TestCase(inputs, 10))
    expect = _trapezoid_oracle([1.0] * 10, 0.1, 10)
    assert abs(tr["yout"][9] - expect[9]) <= 1e-12
    np.testing.assert_allclose(tr["yout"], expect, rtol=0, atol=1e-12)


def test_tustin_reset_follows_ic(tustin):
    tr = simulate(tustin, TestCase({"xin": 3.0, "TL": 5.0, "BL": -5.0, "reset": 1.0, "ic": 2.5}, 20))
    assert np.all(tr["yout"] == 2.5)


def test_trace_has_all_signal_kinds(tustin):
    tr = simulate(tustin, TestCase({"xin": 0, "TL": 1, "BL": -1, "reset": 0, "ic": 0}, 3))
    for b in tustin.inports + tustin.outports:
        assert b.name in tr
    assert "96:1" in tr and "141:1" in tr
    assert {len(v) for v in tr.signals.values()} == {3}
    header = tr.to_csv().splitlines()[0].split(",")
    assert "yout" in header and len(tr.to_csv().splitlines()) == 4


def test_missing_inport_value():
    with pytest.raises(TestCaseError):
        simulate(chain(("Gain", {"gain": 1})), TestCase({}, 3))


def test_wrong_length_signal():
    with pytest.raises(TestCaseError):
        simulate(chain(("Gain", {"gain": 1})), TestCase({"u": [1, 2]}, 3))


def test_numeric_error():
    m = chain(("Gain", {"gain": 1e308}), ("Gain", {"gain": 1e308}))
    with pytest.raises(NumericError) as ei:
        simulate(m, TestCase({"u": 0.1}, 2))
    assert ei.value.sid == 3 and ei.value.step == 0


def test_logic_and_relops():
    blocks = [Block(1, "a", "Inport"), Block(2, "b", "Inport"), Block(3, "lt", "RelationalOperator", {"op": "<"}),
              Block(4, "n", "LogicalOperator", {"op": "NOT"}), Block(5, "y", "Outport"), Block(6, "z", "Outport")]
    conns = [Connection(1, 1, 3, 1), Connection(2, 1, 3, 2), Connection(3, 1, 4, 1), Connection(3, 1, 5, 1),
             Connection(4, 1, 6, 1)]
    m = Model("l", 1.0, tuple(blocks), tuple(conns))
    tr = simulate(m, TestCase({"a": [0, 2, 1], "b": [1, 1, 1]}, 3))
    np.testing.assert_array_equal(tr["y"], [1, 0, 0])
    np.testing.assert_array_equal(tr["z"], [0, 1, 1])


def test_simulate_is_pure(tustin):
    t = TestCase({"xin": 0.3, "TL": 4, "BL": -2, "reset": 0, "ic": 1}, 50)
    a, b = simulate(tustin, t), simulate(tustin, t)
    assert all(np.array_equal(a[k], b[k]) for k in a)
