"""Requirement-driven slicing of block-diagram models with language-model backends."""

from .backend import BlockList, aggregate_union, oracle_slice, parse_block_list
from .data import data_path
from .evaluate import Outcome, RequirementSpec, fitness, generate_test_suite, load_requirements, verdict
from .model import Model, load_model, parse_model, validate
from .prompt import PromptConfig, Strategy, build_prompt
from .simulate import TestCase, simulate
from .slicer import Slice, build_slice
from .textualize import Verbosity, textualize

__version__ = "0.1.0"

__all__ = [
    "BlockList",
    "Model",
    "Outcome",
    "PromptConfig",
    "RequirementSpec",
    "Slice",
    "Strategy",
    "TestCase",
    "Verbosity",
    "aggregate_union",
    "build_prompt",
    "build_slice",
    "data_path",
    "fitness",
    "generate_test_suite",
    "load_model",
    "load_requirements",
    "oracle_slice",
    "parse_block_list",
    "parse_model",
    "simulate",
    "textualize",
    "validate",
    "verdict",
]
