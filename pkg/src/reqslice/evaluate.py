"""Requirement fitness, test-suite generation, and slice accuracy verdicts.

A requirement is an implication ``antecedent => consequent`` over model signals.
Its fitness on a trace is the smallest consequent robustness over the steps where
the antecedent holds (robustness > 0).  A slice is accurate when, on every test
case, its fitness has the same polarity as the original model's, and the
requirement is not satisfied vacuously on the slice.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .expr import DEFAULT_TOL, Expr, ExprError, UnknownSignal, is_boolean, parse_expr, robustness_series, signals
from .model import Model
from .simulate import DEFAULT_STEPS, TestCase, Trace, simulate_many

__all__ = [
    "FitnessValue",
    "MissingRange",
    "MissingSignal",
    "Outcome",
    "RequirementSpec",
    "Verdict",
    "conciseness",
    "fitness",
    "generate_test_suite",
    "load_requirements",
    "load_test_suite",
    "min_pairwise_distance",
    "save_test_suite",
    "verdict",
]


class MissingSignal(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"trace has no signal {self.name!r}"


class MissingRange(ValueError):
    def __init__(self, inport: str):
        self.inport = inport
        super().__init__(f"no input range declared for inport {inport!r}")


@dataclass(frozen=True)
class RequirementSpec:
    id: str
    text: str
    antecedent: Expr
    consequent: Expr
    tol: float = DEFAULT_TOL

    @classmethod
    def from_strings(cls, id: str, text: str, antecedent: str, consequent: str, tol: float | None = None):
        ant, con = parse_expr(antecedent), parse_expr(consequent)
        for label, e in (("antecedent", ant), ("consequent", con)):
            if not is_boolean(e):
                raise ExprError(f"{id}: {label} must be a boolean expression")
        return cls(id, text, ant, con, DEFAULT_TOL if tol is None else float(tol))

    @property
    def signals(self) -> set[str]:
        return signals(self.antecedent) | signals(self.consequent)

    @property
    def consequent_signals(self) -> set[str]:
        return signals(self.consequent)

    def check_against(self, m: Model) -> None:
        """Raise UnknownSignal unless every signal names an Inport or Outport of ``m``."""
        known = {b.name for b in m.inports} | {b.name for b in m.outports}
        for name in sorted(self.signals):
            if name not in known:
                raise UnknownSignal(name)


def load_requirements(path) -> list[RequirementSpec]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        RequirementSpec.from_strings(r["id"], r["text"], r["antecedent"], r["consequent"], r.get("tol"))
        for r in doc["requirements"]
    ]


# ---------------------------------------------------------------- fitness


@dataclass(frozen=True)
class FitnessValue:
    """Fitness of one requirement on one trace.

    ``value`` is None when the antecedent never held; such a test case satisfies
    the implication vacuously and counts as positive.
    """

    value: float | None
    triggered: bool

    @property
    def positive(self) -> bool:
        return not self.triggered or self.value > 0

    @property
    def polarity(self) -> str:
        if not self.triggered:
            return "Untriggered"
        return "Positive" if self.value > 0 else "NonPositive"

    def __str__(self) -> str:
        return "untriggered" if not self.triggered else f"{self.value:.6g}"


def fitness(spec: RequirementSpec, trace: Mapping[str, np.ndarray]) -> FitnessValue:
    for name in sorted(spec.signals):
        if name not in trace:
            raise MissingSignal(name)
    ant = robustness_series(spec.antecedent, trace, spec.tol)
    con = robustness_series(spec.consequent, trace, spec.tol)
    hit = ant > 0
    if not hit.any():
        return FitnessValue(None, False)
    return FitnessValue(float(np.min(con[hit])), True)


# ---------------------------------------------------------------- test generation


def _unit_inputs(tests: Sequence[TestCase], m: Model) -> np.ndarray:
    names = [b.name for b in m.inports]
    lo = np.array([m.input_ranges[n][0] for n in names])
    width = np.array([m.input_ranges[n][1] - m.input_ranges[n][0] for n in names])
    x = np.array([[float(np.mean(t.signal(n))) for n in names] for t in tests])
    return np.divide(x - lo, width, out=np.zeros_like(x), where=width > 0)


def min_pairwise_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return math.inf
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    return float(d[np.triu_indices(len(points), 1)].min())


def generate_test_suite(m: Model, n: int, seed: int, steps: int = DEFAULT_STEPS) -> list[TestCase]:
    """Pick ``n`` diverse constant-input test cases.

    Draws ``10 * n`` candidates uniformly from the model's input ranges and
    greedily grows the suite by adding the candidate farthest (in range-
    normalised Euclidean distance) from those already chosen.
    """
    if n < 1:
        raise ValueError("test suite size must be at least 1")
    names = [b.name for b in m.inports]
    for name in names:
        if name not in m.input_ranges:
            raise MissingRange(name)
    rng = np.random.default_rng(seed)
    unit = rng.random((10 * n, len(names)))
    lo = np.array([m.input_ranges[k][0] for k in names])
    hi = np.array([m.input_ranges[k][1] for k in names])
    values = lo + unit * (hi - lo)

    chosen = [0]
    nearest = np.sqrt(((unit - unit[0]) ** 2).sum(-1))
    while len(chosen) < n:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.sqrt(((unit - unit[nxt]) ** 2).sum(-1)))
    width = len(str(n))
    return [
        TestCase({k: float(values[i, j]) for j, k in enumerate(names)}, steps, f"T{c + 1:0{width}d}")
        for c, i in enumerate(chosen)
    ]


def save_test_suite(tests: Sequence[TestCase], path, seed: int | None = None) -> None:
    doc = {"seed": seed, "tests": [t.to_dict() for t in tests]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_test_suite(path) -> list[TestCase]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [TestCase.from_dict(d) for d in doc["tests"]]


# ---------------------------------------------------------------- verdicts


class Outcome(enum.Enum):
    ACCURATE = "✓"
    INACCURATE = "✗"
    VACUOUS = "V"

    @property
    def symbol(self) -> str:
        return self.value


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    per_test: tuple[tuple[str, FitnessValue, FitnessValue | None], ...] = field(default=())
    reason: str = ""


def _slice_env(trace: Trace, test: TestCase, original: Model) -> dict[str, np.ndarray]:
    # Inport signals are stimulus: they exist whether or not the slice keeps the Inport.
    env = dict(trace.signals)
    for b in original.inports:
        if b.name not in env and b.name in test.inputs:
            env[b.name] = test.signal(b.name)
    return env


def original_fitness(m: Model, spec: RequirementSpec, suite: Sequence[TestCase]) -> list[FitnessValue]:
    return [fitness(spec, tr) for tr in simulate_many(m, suite)]


def verdict(
    m: Model,
    s,
    spec: RequirementSpec,
    suite: Sequence[TestCase],
    original: Sequence[FitnessValue] | None = None,
) -> Verdict:
    """Classify slice ``s`` (anything with a ``.model``) for ``spec`` on ``suite``.

    ``original`` may carry precomputed fitness values of ``m`` on ``suite``.
    """
    if not suite:
        raise ValueError("verdict needs a nonempty test suite")
    if original is None:
        original = original_fitness(m, spec, suite)
    sliced = getattr(s, "model", s)
    present = {b.name for b in sliced.outports} | {b.name for b in m.inports}
    missing = sorted(spec.signals - present)
    if missing:
        per = tuple((t.id, fo, None) for t, fo in zip(suite, original))
        return Verdict(Outcome.VACUOUS, per, f"slice lacks signal(s) {', '.join(missing)}")

    traces = simulate_many(sliced, suite)
    per = tuple(
        (t.id, fo, fitness(spec, _slice_env(tr, t, m))) for t, fo, tr in zip(suite, original, traces)
    )
    if not any(fs.triggered for _, _, fs in per):
        return Verdict(Outcome.VACUOUS, per, "antecedent never triggered on the slice")
    flips = [tid for tid, fo, fs in per if fo.positive != fs.positive]
    if flips:
        return Verdict(Outcome.INACCURATE, per, f"fitness polarity differs on {', '.join(flips)}")
    return Verdict(Outcome.ACCURATE, per)


def conciseness(s) -> int:
    return len(getattr(s, "model", s).blocks)
