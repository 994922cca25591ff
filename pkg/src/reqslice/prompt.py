"""Slicing prompts: the fixed six-segment template and training-example fragments."""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .model import load_model
from .textualize import Verbosity, textualize, token_count

__all__ = [
    "BudgetStatus",
    "ExampleCountMismatch",
    "INSTRUCTION",
    "CLOSING",
    "MissingReasoning",
    "Prompt",
    "PromptConfig",
    "SLICE_DEFINITION",
    "Strategy",
    "TokenBudgetWarning",
    "TrainingExample",
    "build_prompt",
    "build_training_fragment",
    "check_token_budget",
    "load_training_examples",
]

# Template segments 1, 4 and 6 are fixed text; 2, 3 and 5 are filled in.
SLICE_DEFINITION = (
    "A model slice consists of the parts of a model that potentially impacts the input "
    "parameter values computed at some point of interest. This point of interest is referred "
    "to as a slicing criterion and is specified by a location in the model in combination "
    "with a subset of the model's variables. You are a requirement engineer working on "
    "requirements verification and testing for the following system."
)
MODEL_LABEL = "Textual Simulink Model: "
EXAMPLE_LABEL = "Example: "
INSTRUCTION = (
    "Parse the provided Simulink model to extract the blocks and corresponding SID values "
    "which meets the requirement:"
)
REQUIREMENT_LABEL = "Requirement: "
CLOSING = "Provide your answer as a list of block ids."

SEPARATOR = "\n\n"

DEFAULT_TOKEN_LIMIT = 128_000


class Strategy(enum.Enum):
    CHAIN_OF_THOUGHT = "CT"
    N_SHOT = "NS"
    ZERO_SHOT = "ZS"

    @property
    def code(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: "str | Strategy") -> "Strategy":
        if isinstance(text, cls):
            return text
        t = str(text).strip().lower().replace("_", "-")
        aliases = {
            "ct": cls.CHAIN_OF_THOUGHT, "cot": cls.CHAIN_OF_THOUGHT, "chain-of-thought": cls.CHAIN_OF_THOUGHT,
            "ns": cls.N_SHOT, "n-shot": cls.N_SHOT, "nshot": cls.N_SHOT,
            "zs": cls.ZERO_SHOT, "zero-shot": cls.ZERO_SHOT, "zeroshot": cls.ZERO_SHOT,
        }
        if t not in aliases:
            raise ValueError(f"unknown strategy {text!r}; use chain-of-thought, n-shot or zero-shot")
        return aliases[t]


class ExampleCountMismatch(ValueError):
    pass


class MissingReasoning(ValueError):
    pass


class TokenBudgetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PromptConfig:
    verbosity: Verbosity = Verbosity.MEDIUM
    strategy: Strategy = Strategy.ZERO_SHOT
    n_examples: int = 0
    token_limit: int = DEFAULT_TOKEN_LIMIT

    def __post_init__(self):
        if self.token_limit <= 0:
            raise ValueError("token_limit must be positive")
        if self.strategy is Strategy.ZERO_SHOT and self.n_examples != 0:
            raise ValueError("zero-shot prompts take no training examples")
        if self.strategy is not Strategy.ZERO_SHOT and self.n_examples < 1:
            raise ValueError(f"{self.strategy.name} prompts need at least one training example")

    @property
    def code(self) -> str:
        return f"{self.verbosity.code}-{self.strategy.code}"


@dataclass(frozen=True)
class TrainingExample:
    model_text: str
    requirement_text: str
    block_sids: tuple[int, ...]
    reasoning_steps: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.block_sids:
            raise ValueError("a training example needs a nonempty slice")


@dataclass(frozen=True)
class Prompt:
    text: str
    token_estimate: int
    config: PromptConfig
    requirement_text: str = field(default="", compare=False)


def _sid_list(sids: Sequence[int]) -> str:
    return "[" + ", ".join(str(s) for s in sids) + "]"


def build_training_fragment(ex: TrainingExample, strategy: Strategy | str) -> str:
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.ZERO_SHOT:
        return ""
    parts = [
        "Training model:\n" + ex.model_text.rstrip("\n"),
        f"Training requirement: {ex.requirement_text}",
    ]
    if strategy is Strategy.CHAIN_OF_THOUGHT:
        if not ex.reasoning_steps:
            raise MissingReasoning("chain-of-thought examples need reasoning steps")
        steps = "\n".join(f"{i}. {s}" for i, s in enumerate(ex.reasoning_steps, start=1))
        parts.append("Reasoning steps:\n" + steps)
    parts.append(f"Block list: {_sid_list(ex.block_sids)}")
    return "\n".join(parts)


def build_prompt(
    model_text: str,
    requirement_text: str,
    cfg: PromptConfig,
    examples: Sequence[TrainingExample] = (),
) -> Prompt:
    if len(examples) != cfg.n_examples:
        raise ExampleCountMismatch(f"config expects {cfg.n_examples} example(s), got {len(examples)}")
    fragments = "\n\n".join(build_training_fragment(ex, cfg.strategy) for ex in examples)
    text = SEPARATOR.join([
        SLICE_DEFINITION,
        MODEL_LABEL + model_text.rstrip("\n"),
        EXAMPLE_LABEL + fragments,
        INSTRUCTION,
        REQUIREMENT_LABEL + requirement_text,
        CLOSING,
    ])
    return Prompt(text, token_count(text), cfg, requirement_text)


@dataclass(frozen=True)
class BudgetStatus:
    ok: bool
    overage: int = 0


def check_token_budget(p: Prompt) -> BudgetStatus:
    """Compare the prompt estimate with its token limit and warn on overage."""
    overage = p.token_estimate - p.config.token_limit
    if overage > 0:
        warnings.warn(
            f"prompt needs ~{p.token_estimate} tokens, {overage} over the limit of {p.config.token_limit}",
            TokenBudgetWarning,
            stacklevel=2,
        )
        return BudgetStatus(False, overage)
    return BudgetStatus(True)


def load_training_examples(path, verbosity: Verbosity | str | None = None) -> list[TrainingExample]:
    """Read a training-example file and textualize each referenced model.

    Model paths are relative to the file.  ``verbosity`` overrides the level
    recorded per example.
    """
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    out = []
    cache: dict[Path, object] = {}
    for raw in doc["examples"]:
        mpath = (path.parent / raw["model"]).resolve()
        if mpath not in cache:
            cache[mpath] = load_model(mpath)
        level = Verbosity.parse(verbosity if verbosity is not None else raw.get("verbosity", "medium"))
        reasoning = raw.get("reasoning")
        out.append(TrainingExample(
            textualize(cache[mpath], level),
            raw["requirement"],
            tuple(int(s) for s in raw["block_sids"]),
            tuple(reasoning) if reasoning else None,
        ))
    return out
