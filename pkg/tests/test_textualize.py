import re
from pathlib import Path

import pytest

from reqslice.model import Block, Model
from reqslice.textualize import InvalidModel, Verbosity, format_value, textualize, token_count

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("level", ["high", "medium", "low"])
def test_excerpt_goldens(excerpt, level):
    assert textualize(excerpt, level) == (GOLDEN / f"tustin_limits_{level}.txt").read_text()


def test_medium_is_high_without_positions(tustin):
    high = textualize(tustin, Verbosity.HIGH)
    stripped = re.sub(r" position=\(\d+,\d+,\d+,\d+\)", "", high)
    assert stripped == textualize(tustin, Verbosity.MEDIUM)


def test_low_keeps_only_identity(tustin):
    lines = textualize(tustin, "low").splitlines()
    assert lines[0].startswith("model Tustin")
    pat = re.compile(r'^block sid=\d+ name="[^"]*" type=\w+$')
    assert all(pat.match(line) for line in lines[1:])
    assert len(lines) == 1 + 57


def test_sid_order_and_all_connections(tustin):
    text = textualize(tustin, "medium")
    sids = [int(x) for x in re.findall(r"^block sid=(\d+)", text, re.M)]
    assert sids == sorted(tustin.sids)
    assert len(re.findall(r"^conn ", text, re.M)) == len(tustin.connections)


def test_lengths_strictly_ordered(tustin):
    h, m, l = (len(textualize(tustin, v)) for v in ("high", "medium", "low"))
    assert h > m > l


def test_deterministic(tustin):
    assert textualize(tustin, "high") == textualize(tustin, "high")


def test_invalid_model_rejected():
    m = Model("bad", 1.0, (Block(1, "g", "Gain", {"gain": 1}),))
    with pytest.raises(InvalidModel):
        textualize(m, "medium")


@pytest.mark.parametrize("v,expected", [(3, "3"), (0.5, "0.5"), (2.0, "2"), ("+-", '"+-"'), (-1e-7, "-1e-07")])
def test_format_value(v, expected):
    assert format_value(v) == expected


def test_verbosity_parse():
    assert Verbosity.parse("H") is Verbosity.HIGH
    assert Verbosity.parse("Medium") is Verbosity.MEDIUM
    with pytest.raises(ValueError):
        Verbosity.parse("verbose")


def test_token_count():
    assert token_count("") == 0
    assert token_count("abcd") == 1
    assert token_count("abcde") == 2
    assert token_count("é") == 1  # two utf-8 bytes
    assert token_count("a b c", estimator=lambda t: len(t.split())) == 3
