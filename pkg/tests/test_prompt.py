import json
import warnings

import pytest

from reqslice.data import data_path
from reqslice.prompt import (
    CLOSING,
    INSTRUCTION,
    SLICE_DEFINITION,
    ExampleCountMismatch,
    MissingReasoning,
    PromptConfig,
    Strategy,
    TokenBudgetWarning,
    TrainingExample,
    build_prompt,
    build_training_fragment,
    check_token_budget,
    load_training_examples,
)
from reqslice.textualize import Verbosity, textualize, token_count

R_TEXT = "When reset is True the Output (yout) shall match ic."


@pytest.fixture(scope="module")
def examples():
    return load_training_examples(data_path("training_examples.json"), "medium")


def test_definition_text_is_fixed():
    assert SLICE_DEFINITION.startswith("A model slice consists of the parts of a model")
    assert SLICE_DEFINITION.endswith("for the following system.")
    assert INSTRUCTION.endswith("which meets the requirement:")
    assert CLOSING == "Provide your answer as a list of block ids."


def test_segment_order(tustin, examples):
    text = textualize(tustin, "medium")
    p = build_prompt(text, R_TEXT, PromptConfig(Verbosity.MEDIUM, Strategy.N_SHOT, 1), examples[:1])
    marks = [SLICE_DEFINITION, "Textual Simulink Model: ", "Example: ", INSTRUCTION, "Requirement: " + R_TEXT, CLOSING]
    pos = [p.text.index(mk) for mk in marks]
    assert pos == sorted(pos)
    assert p.text.endswith(CLOSING)
    assert text.rstrip() in p.text


def test_zero_shot_is_cot_minus_examples(tustin, examples):
    text = textualize(tustin, "low")
    ct = build_prompt(text, R_TEXT, PromptConfig(Verbosity.LOW, Strategy.CHAIN_OF_THOUGHT, 2), examples[:2])
    zs = build_prompt(text, R_TEXT, PromptConfig(Verbosity.LOW, Strategy.ZERO_SHOT, 0))
    frag = "\n\n".join(build_training_fragment(e, Strategy.CHAIN_OF_THOUGHT) for e in examples[:2])
    assert ct.text.replace(frag, "", 1) == zs.text


def test_cot_has_reasoning_and_ns_not(examples):
    ct = build_training_fragment(examples[0], Strategy.CHAIN_OF_THOUGHT)
    ns = build_training_fragment(examples[0], "n-shot")
    assert "Reasoning steps:\n1. " in ct
    assert "Reasoning steps" not in ns
    assert ns.splitlines()[-1] == ct.splitlines()[-1]
    assert ns.splitlines()[-1].startswith("Block list: [")


def test_missing_reasoning():
    ex = TrainingExample("model m", "req", (1, 2))
    with pytest.raises(MissingReasoning):
        build_training_fragment(ex, Strategy.CHAIN_OF_THOUGHT)
    assert build_training_fragment(ex, Strategy.N_SHOT)


def test_example_count_mismatch(examples):
    with pytest.raises(ExampleCountMismatch):
        build_prompt("m", "r", PromptConfig(Verbosity.LOW, Strategy.N_SHOT, 2), examples[:1])


def test_config_invariants():
    with pytest.raises(ValueError):
        PromptConfig(Verbosity.LOW, Strategy.ZERO_SHOT, 1)
    with pytest.raises(ValueError):
        PromptConfig(Verbosity.LOW, Strategy.N_SHOT, 0)
    with pytest.raises(ValueError):
        PromptConfig(Verbosity.LOW, Strategy.ZERO_SHOT, 0, token_limit=0)
    assert PromptConfig(Verbosity.HIGH, Strategy.CHAIN_OF_THOUGHT, 1).code == "H-CT"


def test_strategy_aliases():
    assert Strategy.parse("chain-of-thought") is Strategy.parse("CT") is Strategy.CHAIN_OF_THOUGHT
    assert Strategy.parse("zero_shot") is Strategy.ZERO_SHOT
    with pytest.raises(ValueError):
        Strategy.parse("few")


def test_token_estimate(tustin):
    p = build_prompt(textualize(tustin, "high"), R_TEXT, PromptConfig())
    assert p.token_estimate == token_count(p.text)


def test_budget_boundary():
    p = build_prompt("m", "r", PromptConfig(token_limit=10_000))
    limit = p.token_estimate
    at = build_prompt("m", "r", PromptConfig(token_limit=limit))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_token_budget(at).ok
    over = build_prompt("m", "r", PromptConfig(token_limit=limit - 1))
    with pytest.warns(TokenBudgetWarning):
        status = check_token_budget(over)
    assert not status.ok and status.overage == 1


def test_training_file_shape(blender):
    doc = json.loads(data_path("training_examples.json").read_text())
    assert len(doc["examples"]) == 3
    for raw in doc["examples"]:
        assert set(raw["block_sids"]) <= set(blender.sids)
        assert raw["reasoning"]


def test_examples_follow_requested_verbosity(examples):
    low = load_training_examples(data_path("training_examples.json"), "low")
    assert "position=" not in examples[0].model_text and "conn " in examples[0].model_text
    assert "conn " not in low[0].model_text
