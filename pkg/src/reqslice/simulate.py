"""Fixed-step synchronous simulation of block-diagram models.

Every signal is a real scalar; booleans are 1.0/0.0.  A batch of test cases
runs together (each signal value at a step is a vector with one entry per test
case), so that evaluating a whole test suite costs one pass over the schedule per
step.
"""

from __future__ import annotations

import csv
import heapq
import io
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .model import Block, Model, port_counts

__all__ = [
    "AlgebraicLoop",
    "DEFAULT_STEPS",
    "NumericError",
    "SimulationError",
    "TestCase",
    "TestCaseError",
    "Trace",
    "schedule",
    "simulate",
    "simulate_many",
]

DEFAULT_STEPS = 50


class SimulationError(Exception):
    pass


class AlgebraicLoop(SimulationError):
    def __init__(self, sids: Sequence[int]):
        self.sids = list(sids)
        super().__init__(f"algebraic loop through blocks {self.sids}")


class NumericError(SimulationError):
    def __init__(self, sid: int, step: int):
        self.sid, self.step = sid, step
        super().__init__(f"non-finite value at block {sid}, step {step}")


class TestCaseError(SimulationError):
    __test__ = False


@dataclass(frozen=True)
class TestCase:
    """Input stimulus: one scalar (held) or one per-step list per Inport name."""

    __test__ = False  # not a pytest class

    inputs: Mapping[str, float | Sequence[float]]
    steps: int = DEFAULT_STEPS
    id: str = ""

    def signal(self, name: str) -> np.ndarray:
        if name not in self.inputs:
            raise TestCaseError(f"test case {self.id!r} has no value for inport {name!r}")
        v = self.inputs[name]
        if np.isscalar(v):
            return np.full(self.steps, float(v))
        arr = np.asarray(v, dtype=float)
        if arr.shape != (self.steps,):
            raise TestCaseError(
                f"test case {self.id!r}: signal {name!r} has length {arr.size}, expected {self.steps}"
            )
        return arr

    def to_dict(self) -> dict:
        inputs = {k: (v if np.isscalar(v) else list(v)) for k, v in self.inputs.items()}
        return {"id": self.id, "steps": self.steps, "inputs": inputs}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TestCase":
        return cls(dict(d["inputs"]), int(d.get("steps", DEFAULT_STEPS)), str(d.get("id", "")))


@dataclass
class Trace:
    """Per-signal value arrays of one simulation run.

    Keys are Inport names, Outport names and ``"sid:port"`` for every block
    output port.
    """

    signals: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(next(iter(self.signals.values()))) if self.signals else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.signals[name]

    def __contains__(self, name: object) -> bool:
        return name in self.signals

    def __iter__(self) -> Iterator[str]:
        return iter(self.signals)

    def to_csv(self) -> str:
        names = list(self.signals)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        cols = [self.signals[n] for n in names]
        for k in range(self.steps):
            w.writerow([repr(float(c[k])) for c in cols])
        return buf.getvalue()


# ---------------------------------------------------------------- scheduling


def _dependencies(m: Model) -> dict[int, set[int]]:
    """Same-step dependencies: each block needs the blocks driving it.

    UnitDelay outputs are state, so a UnitDelay depends on nothing within a step.
    A From depends on the Goto with its tag.
    """
    deps: dict[int, set[int]] = {b.sid: set() for b in m.blocks}
    for c in m.connections:
        if m.block(c.dst).block_type != "UnitDelay":
            deps[c.dst].add(c.src)
    gotos = m.gotos_by_tag()
    for f in m.blocks_of_type("From"):
        for g in gotos.get(str(f.param("tag")), []):
            deps[f.sid].add(g.sid)
    return deps


def schedule(m: Model) -> list[Block]:
    """Execution order: a topological sort of same-step dependencies.

    Ties are broken by file order so the schedule is deterministic.  Raises
    AlgebraicLoop when a cycle is not broken by a UnitDelay.
    """
    deps = _dependencies(m)
    try:
        TopologicalSorter(deps).prepare()
    except CycleError as exc:
        cycle = exc.args[1]
        raise AlgebraicLoop(sorted(set(cycle), key=cycle.index)) from None

    index = {b.sid: i for i, b in enumerate(m.blocks)}
    users: dict[int, list[int]] = {sid: [] for sid in deps}
    pending = {sid: len(d) for sid, d in deps.items()}
    for sid, d in deps.items():
        for p in d:
            users[p].append(sid)
    ready = [(index[s], s) for s, n in pending.items() if n == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, sid = heapq.heappop(ready)
        order.append(m.block(sid))
        for u in users[sid]:
            pending[u] -= 1
            if pending[u] == 0:
                heapq.heappush(ready, (index[u], u))
    return order


# ---------------------------------------------------------------- block semantics

Kernel = Callable[[list[np.ndarray]], np.ndarray]

_RELOPS = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
    "~=": np.not_equal,
}


def _kernel(b: Block) -> Kernel:
    t, p = b.block_type, b.params
    if t in ("Outport", "Goto"):
        return lambda u: u[0]
    if t == "Abs":
        return lambda u: np.abs(u[0])
    if t == "Gain":
        k = float(p["gain"])
        return lambda u: k * u[0]
    if t == "Sum":
        signs = [1.0 if s == "+" else -1.0 for s in str(p["signs"]).replace("|", "")]

        def _sum(u):
            acc = signs[0] * u[0]
            for s, x in zip(signs[1:], u[1:]):
                acc = acc + x if s > 0 else acc - x
            return acc

        return _sum
    if t == "Product":

        def _prod(u):
            acc = u[0]
            for x in u[1:]:
                acc = acc * x
            return acc

        return _prod
    if t == "Switch":
        thr = float(p["threshold"])
        return lambda u: np.where(u[1] >= thr, u[0], u[2])
    if t == "Saturation":
        lo, hi = float(p["lower_limit"]), float(p["upper_limit"])
        return lambda u: np.minimum(np.maximum(u[0], lo), hi)
    if t == "RelationalOperator":
        op = _RELOPS[p["op"]]
        return lambda u: op(u[0], u[1]).astype(float)
    if t == "LogicalOperator":
        op = str(p["op"]).upper()
        if op == "NOT":
            return lambda u: (u[0] == 0).astype(float)
        if op == "AND":
            return lambda u: np.logical_and.reduce([x != 0 for x in u]).astype(float)
        return lambda u: np.logical_or.reduce([x != 0 for x in u]).astype(float)
    if t == "MinMax":
        if p["op"] == "min":
            return lambda u: np.minimum.reduce(u)
        return lambda u: np.maximum.reduce(u)
    raise SimulationError(f"block {b.sid}: no kernel for type {t}")


# ---------------------------------------------------------------- simulation


def simulate(m: Model, t: TestCase) -> Trace:
    return simulate_many(m, [t])[0]


def simulate_many(m: Model, tests: Sequence[TestCase]) -> list[Trace]:
    """Simulate ``m`` on every test case; returns one Trace per test, in order."""
    if not tests:
        return []
    by_steps: dict[int, list[int]] = {}
    for i, t in enumerate(tests):
        by_steps.setdefault(t.steps, []).append(i)
    order = schedule(m)
    traces: list[Trace | None] = [None] * len(tests)
    for steps, idx in by_steps.items():
        for i, tr in zip(idx, _run(m, order, [tests[i] for i in idx], steps)):
            traces[i] = tr
    return traces  # type: ignore[return-value]


def _check_finite(plan, record, sinks) -> None:
    # report the first non-finite value in (step, schedule position) order
    worst = None
    for pos, (b, _, _) in enumerate(plan):
        arr = sinks[b.sid] if b.sid in sinks else record[(b.sid, 1)]
        bad = ~np.isfinite(arr).all(axis=1)
        if bad.any():
            key = (int(np.argmax(bad)), pos)
            if worst is None or key < worst[0]:
                worst = (key, b.sid)
    if worst is not None:
        raise NumericError(worst[1], worst[0][0])


def _run(m: Model, order: list[Block], tests: list[TestCase], steps: int) -> list[Trace]:
    n = len(tests)
    driver = m.driver
    goto_of = {}
    gotos = m.gotos_by_tag()
    for f in m.blocks_of_type("From"):
        goto_of[f.sid] = gotos[str(f.param("tag"))][0].sid

    stimulus = {
        b.sid: np.stack([t.signal(b.name) for t in tests], axis=1) for b in m.inports
    }
    record = {
        (b.sid, k): np.empty((steps, n)) for b in order for k in range(1, port_counts(b)[1] + 1)
    }
    sinks = {b.sid: np.empty((steps, n)) for b in order if b.block_type in ("Outport", "Goto")}
    state = {
        b.sid: np.full(n, float(b.params["initial"])) for b in order if b.block_type == "UnitDelay"
    }
    plan = []
    for b in order:
        nin = port_counts(b)[0]
        srcs = [driver[(b.sid, p)] for p in range(1, nin + 1)]
        kern = None if b.block_type in ("Inport", "Constant", "UnitDelay", "From") else _kernel(b)
        plan.append((b, srcs, kern))

    cur: dict[tuple[int, int], np.ndarray] = {}
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(steps):
            for b, srcs, kern in plan:
                t = b.block_type
                if t == "Inport":
                    v = stimulus[b.sid][k]
                elif t == "Constant":
                    v = np.full(n, float(b.params["value"]))
                elif t == "UnitDelay":
                    v = state[b.sid]
                elif t == "From":
                    v = sinks[goto_of[b.sid]][k]
                else:
                    v = kern([cur[s] for s in srcs])
                if b.sid in sinks:
                    sinks[b.sid][k] = v
                else:
                    cur[(b.sid, 1)] = v
                    record[(b.sid, 1)][k] = v
            for sid in state:
                state[sid] = cur[driver[(sid, 1)]].copy()
    _check_finite(plan, record, sinks)

    traces = []
    for i in range(n):
        sig: dict[str, np.ndarray] = {}
        for b in m.inports:
            sig[b.name] = record[(b.sid, 1)][:, i]
        for b in m.outports:
            sig[b.name] = sinks[b.sid][:, i]
        for (sid, port), arr in record.items():
            sig[f"{sid}:{port}"] = arr[:, i]
        traces.append(Trace(sig))
    return traces
