import json

import pytest

from reqslice.model import (
    Block,
    Connection,
    IntegrityError,
    Model,
    ModelSyntaxError,
    SchemaError,
    errors_only,
    model_to_dict,
    parse_model,
    port_counts,
    serialize_model,
    validate,
)

from conftest import chain


def _doc(m):
    return model_to_dict(m)


def test_fixture_counts(tustin, blender):
    assert tustin.summary()["blocks"] == 57
    assert (len(tustin.inports), len(tustin.outports)) == (5, 10)
    assert len(blender.blocks) == 95
    assert (len(blender.inports), len(blender.outports)) == (1, 7)


def test_fixtures_validate_clean(tustin, blender, excerpt):
    for m in (tustin, blender, excerpt):
        assert errors_only(validate(m)) == []


def test_reference_sids_present(tustin):
    for sid in (89, 90, 96, 132, 140, 93, 99, 141, 142):
        assert sid in tustin.by_sid
    assert tustin.block(96).block_type == "Switch"
    assert tustin.block(93).block_type == "Saturation"
    assert {tustin.block(s).block_type for s in (132, 140)} == {"Goto"}
    assert {tustin.block(s).block_type for s in (141, 142)} == {"From"}


def test_roundtrip(tustin):
    again = parse_model(serialize_model(tustin))
    assert again == tustin
    assert serialize_model(again) == serialize_model(tustin)


def test_malformed_json():
    with pytest.raises(ModelSyntaxError):
        parse_model("{not json")


@pytest.mark.parametrize("drop", ["name", "blocks", "connections", "sample_time"])
def test_missing_top_level_field(drop):
    d = _doc(chain(("Gain", {"gain": 2})))
    del d[drop]
    with pytest.raises(SchemaError):
        parse_model(json.dumps(d))


def test_unknown_block_type():
    d = _doc(chain(("Gain", {"gain": 2})))
    d["blocks"][1]["type"] = "Integrator"
    with pytest.raises(SchemaError):
        parse_model(json.dumps(d))


def test_duplicate_sid():
    d = _doc(chain(("Gain", {"gain": 2})))
    d["blocks"][1]["sid"] = 1
    with pytest.raises(IntegrityError, match="DuplicateSID"):
        parse_model(json.dumps(d))


def test_dangling_endpoint():
    d = _doc(chain(("Gain", {"gain": 2})))
    d["connections"].append({"src": "77:1", "dst": "2:1"})
    with pytest.raises(IntegrityError, match="DanglingEndpoint"):
        parse_model(json.dumps(d))


def test_from_without_goto():
    m = chain(("Gain", {"gain": 2}))
    d = _doc(m)
    d["blocks"].append({"sid": 9, "name": "f", "type": "From", "params": {"tag": "X"}, "position": [0, 0, 5, 5]})
    with pytest.raises(IntegrityError, match="UnmatchedFrom"):
        parse_model(json.dumps(d))


def test_missing_param_reported_by_validate():
    m = chain(("Gain", {}))
    codes = [v.code for v in validate(m)]
    assert "MissingParam" in codes


def test_unconnected_input_is_error():
    m = chain(("Sum", {"signs": "++"}))
    assert [v.code for v in errors_only(validate(m))] == ["UnconnectedInput"]


def test_goto_without_from_is_only_warning():
    m = chain(("Gain", {"gain": 1}))
    g = Block(10, "g", "Goto", {"tag": "T"}, (0, 0, 5, 5))
    m2 = Model(m.name, 1.0, m.blocks + (g,), m.connections + (Connection(2, 1, 10, 1),), m.input_ranges)
    vs = validate(m2)
    assert [v.code for v in vs] == ["UnmatchedTag"]
    assert errors_only(vs) == []


def test_multiple_drivers():
    m = chain(("Gain", {"gain": 1}))
    m2 = Model(m.name, 1.0, m.blocks, m.connections + (Connection(1, 1, 3, 1),), m.input_ranges)
    assert "MultipleDrivers" in [v.code for v in validate(m2)]


def test_invalid_port():
    m = chain(("Gain", {"gain": 1}))
    m2 = Model(m.name, 1.0, m.blocks, m.connections + (Connection(1, 1, 2, 2),), m.input_ranges)
    assert "InvalidPort" in [v.code for v in validate(m2)]


@pytest.mark.parametrize(
    "btype,params,expected",
    [
        ("Sum", {"signs": "+-+"}, (3, 1)),
        ("Sum", {"signs": "|+-"}, (2, 1)),
        ("Switch", {"threshold": 0}, (3, 1)),
        ("LogicalOperator", {"op": "NOT"}, (1, 1)),
        ("LogicalOperator", {"op": "OR", "inputs": 3}, (3, 1)),
        ("Goto", {"tag": "a"}, (1, 0)),
        ("From", {"tag": "a"}, (0, 1)),
        ("Product", {}, (2, 1)),
    ],
)
def test_port_counts(btype, params, expected):
    assert port_counts(Block(1, "b", btype, params)) == expected


def test_bad_params():
    assert "BadParam" in [v.code for v in validate(chain(("Saturation", {"upper_limit": 0, "lower_limit": 1})))]
    assert "BadParam" in [v.code for v in validate(chain(("Sum", {"signs": "+*"})))]


def test_goto_from_graph_edges(tustin):
    assert 132 in tustin.predecessors(141)
    assert 141 in tustin.successors(132)
