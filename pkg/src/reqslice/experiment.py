"""Configuration grid runner: prompts x requirements x repetitions, plus union slices.

A plan names the model, its requirements, the training examples, which
verbosities and strategies to try, and the backend.  Every (configuration,
requirement) cell is an independent job; the report is assembled after all
jobs finish, so output order never depends on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .backend import BackendConfig, BlockList, Cassette, aggregate_union, make_backend, oracle_slice, parse_block_list
from .data import DATA_DIR
from .evaluate import (
    FitnessValue,
    Outcome,
    RequirementSpec,
    generate_test_suite,
    load_requirements,
    original_fitness,
    verdict,
)
from .model import Model, load_model
from .prompt import Prompt, PromptConfig, Strategy, TokenBudgetWarning, build_prompt, check_token_budget, load_training_examples
from .simulate import DEFAULT_STEPS, TestCase
from .slicer import build_slice, write_slice
from .textualize import Verbosity, textualize

__all__ = [
    "CellResult",
    "ExperimentPlan",
    "ExperimentReport",
    "SliceResult",
    "load_plan",
    "plan_prompts",
    "render_report",
    "run_experiment",
    "synthesize_cassette",
    "write_reports",
]

log = logging.getLogger(__name__)

ERROR_MARK = "E"


def _resolve(base: Path, name: str | None) -> Path | None:
    if name is None:
        return None
    p = Path(name)
    if not p.is_absolute():
        p = base / p
    if not p.exists() and (DATA_DIR / name).exists():
        p = DATA_DIR / name  # fall back to the bundled fixtures
    return p


@dataclass
class ExperimentPlan:
    model: Path
    requirements: Path
    training_examples: Path | None = None
    verbosities: tuple[Verbosity, ...] = (Verbosity.HIGH, Verbosity.MEDIUM, Verbosity.LOW)
    strategies: tuple[Strategy, ...] = (Strategy.CHAIN_OF_THOUGHT, Strategy.N_SHOT, Strategy.ZERO_SHOT)
    repetitions: int = 3
    backend: BackendConfig = field(default_factory=BackendConfig)
    tests: int = 40
    seed: int = 0
    n_examples: int = 1
    steps: int = DEFAULT_STEPS
    const_at: str | int = "step"
    requirement_ids: tuple[str, ...] | None = None
    workers: int = 4
    token_limit: int = 128_000

    def __post_init__(self):
        self.verbosities = tuple(Verbosity.parse(v) for v in self.verbosities)
        self.strategies = tuple(Strategy.parse(s) for s in self.strategies)
        if not self.verbosities or not self.strategies:
            raise ValueError("a plan needs at least one verbosity and one strategy")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.tests < 1:
            raise ValueError("the test suite needs at least one test")
        needs_examples = any(s is not Strategy.ZERO_SHOT for s in self.strategies)
        if needs_examples and self.training_examples is None:
            raise ValueError("chain-of-thought and n-shot prompts need a training_examples file")

    @property
    def configs(self) -> list[PromptConfig]:
        # rows in verbosity-major order: H-CT, H-NS, H-ZS, M-CT, ...
        order_v = [v for v in Verbosity if v in self.verbosities]
        order_s = [s for s in Strategy if s in self.strategies]
        return [
            PromptConfig(v, s, 0 if s is Strategy.ZERO_SHOT else self.n_examples, self.token_limit)
            for v in order_v for s in order_s
        ]

    @classmethod
    def from_dict(cls, d: dict, base: Path | str = ".") -> "ExperimentPlan":
        base = Path(base)
        backend = d.get("backend", {"kind": "oracle"})
        if isinstance(backend, dict) and backend.get("cassette"):
            backend = dict(backend, cassette=str(_resolve(base, backend["cassette"])))
        ids = d.get("requirement_ids")
        return cls(
            model=_resolve(base, d["model"]),
            requirements=_resolve(base, d["requirements"]),
            training_examples=_resolve(base, d.get("training_examples")),
            verbosities=tuple(d.get("verbosities", ("H", "M", "L"))),
            strategies=tuple(d.get("strategies", ("CT", "NS", "ZS"))),
            repetitions=int(d.get("repetitions", 3)),
            backend=backend if isinstance(backend, BackendConfig) else BackendConfig.from_dict(backend),
            tests=int(d.get("tests", 40)),
            seed=int(d.get("seed", 0)),
            n_examples=int(d.get("n_examples", 1)),
            steps=int(d.get("steps", DEFAULT_STEPS)),
            const_at=d.get("const_at", "step"),
            requirement_ids=tuple(ids) if ids else None,
            workers=int(d.get("workers", 4)),
            token_limit=int(d.get("token_limit", 128_000)),
        )


def load_plan(path) -> ExperimentPlan:
    path = Path(path)
    return ExperimentPlan.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class SliceResult:
    label: str
    outcome: Outcome | None
    size: int | None = None
    kept_sids: frozenset[int] = frozenset()
    error: str = ""

    @property
    def mark(self) -> str:
        return self.outcome.symbol if self.outcome is not None else ERROR_MARK


@dataclass
class CellResult:
    config: str
    requirement: str
    iterations: list[SliceResult] = field(default_factory=list)
    union: SliceResult | None = None
    error: str = ""

    @property
    def slices(self) -> list[SliceResult]:
        return ([self.union] if self.union is not None else []) + self.iterations

    def get(self, label: str) -> SliceResult | None:
        return next((s for s in self.slices if s.label == label), None)


@dataclass
class ExperimentReport:
    configs: list[str]
    requirements: list[str]
    repetitions: int
    seed: int
    tests: int
    seed_test: str
    model_name: str
    model_size: int
    cells: dict[tuple[str, str], CellResult] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        its = [f"I{k}" for k in range(1, self.repetitions + 1)]
        return (["All"] if self.repetitions > 1 else []) + its

    @property
    def all_slices(self) -> list[SliceResult]:
        return [s for c in self.cells.values() for s in c.slices]

    @property
    def iteration_count(self) -> int:
        return sum(len(c.iterations) for c in self.cells.values())

    @property
    def union_count(self) -> int:
        return sum(c.union is not None for c in self.cells.values())

    @property
    def slice_count(self) -> int:
        return self.iteration_count + self.union_count

    def count(self, outcome: Outcome) -> int:
        return sum(s.outcome is outcome for s in self.all_slices)

    def accurate_sizes(self) -> list[int]:
        return [s.size for s in self.all_slices if s.outcome is Outcome.ACCURATE]

    def mean_accurate_size(self) -> float | None:
        sizes = self.accurate_sizes()
        return statistics.fmean(sizes) if sizes else None


# ---------------------------------------------------------------- running


@dataclass
class _Context:
    plan: ExperimentPlan
    model: Model
    specs: dict[str, RequirementSpec]
    suite: list[TestCase]
    seed_input: TestCase
    originals: dict[str, list[FitnessValue]]
    backend: object
    slice_dir: Path | None


def _examples_for(plan: ExperimentPlan, v: Verbosity, cache: dict):
    if plan.training_examples is None:
        return []
    if v not in cache:
        cache[v] = load_training_examples(plan.training_examples, v)
    return cache[v]


def plan_prompts(plan: ExperimentPlan) -> list[tuple[str, str, Prompt]]:
    """Every prompt the plan sends, as (config code, requirement id, prompt)."""
    m = load_model(plan.model)
    specs = _select(load_requirements(plan.requirements), plan.requirement_ids)
    texts: dict[Verbosity, str] = {}
    cache: dict = {}
    out = []
    for cfg in plan.configs:
        if cfg.verbosity not in texts:
            texts[cfg.verbosity] = textualize(m, cfg.verbosity)
        examples = _examples_for(plan, cfg.verbosity, cache)[: cfg.n_examples]
        if len(examples) < cfg.n_examples:
            raise ValueError(f"{cfg.code} needs {cfg.n_examples} training example(s), file has {len(examples)}")
        for spec in specs:
            out.append((cfg.code, spec.id, build_prompt(texts[cfg.verbosity], spec.text, cfg, examples)))
    return out


def _select(specs: list[RequirementSpec], ids) -> list[RequirementSpec]:
    if not ids:
        return specs
    by_id = {s.id: s for s in specs}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise KeyError(f"unknown requirement id(s): {', '.join(missing)}")
    return [by_id[i] for i in ids]


def _evaluate(ctx: _Context, spec: RequirementSpec, bl: BlockList, label: str, config: str) -> SliceResult:
    s = build_slice(ctx.model, bl, ctx.seed_input, ctx.plan.const_at, spec.id)
    v = verdict(ctx.model, s, spec, ctx.suite, ctx.originals[spec.id])
    if ctx.slice_dir is not None:
        write_slice(s, ctx.slice_dir / f"{config}_{spec.id}_{label}.json")
    log.info("%s %s %s: %s size=%d %s", config, spec.id, label, v.outcome.name, s.size, v.reason)
    return SliceResult(label, v.outcome, s.size, s.kept_sids)


def _run_cell(ctx: _Context, config: str, spec: RequirementSpec, prompt: Prompt) -> CellResult:
    cell = CellResult(config, spec.id)
    status = check_token_budget_quiet(prompt)
    if not status.ok:
        log.warning("%s %s: prompt is %d tokens over the limit", config, spec.id, status.overage)
    source = ctx.plan.backend.kind
    lists: list[BlockList] = []
    for k in range(ctx.plan.repetitions):
        label = f"I{k + 1}"
        try:
            reply = ctx.backend.complete(prompt, k)
            bl = parse_block_list(reply, ctx.model, source, k)
            if bl.ignored:
                log.info("%s %s %s: ignored non-SID integers %s", config, spec.id, label, list(bl.ignored))
            lists.append(bl)
            cell.iterations.append(_evaluate(ctx, spec, bl, label, config))
        except Exception as exc:  # cell-local: record and carry on
            log.error("%s %s %s failed: %s: %s", config, spec.id, label, type(exc).__name__, exc)
            cell.iterations.append(SliceResult(label, None, error=f"{type(exc).__name__}: {exc}"))
    if ctx.plan.repetitions > 1:
        if lists:
            try:
                cell.union = _evaluate(ctx, spec, aggregate_union(lists), "All", config)
            except Exception as exc:
                log.error("%s %s All failed: %s: %s", config, spec.id, type(exc).__name__, exc)
                cell.union = SliceResult("All", None, error=f"{type(exc).__name__}: {exc}")
        else:
            cell.union = SliceResult("All", None, error="no iteration produced a block list")
    return cell


def check_token_budget_quiet(prompt: Prompt):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TokenBudgetWarning)
        return check_token_budget(prompt)


def run_experiment(plan: ExperimentPlan, out_dir=None, transport=None) -> ExperimentReport:
    """Run the whole grid; with ``out_dir`` also write slices, reports and ``run.log``."""
    out = Path(out_dir) if out_dir is not None else None
    handler = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logging.getLogger("reqslice").addHandler(handler)
        if logging.getLogger("reqslice").getEffectiveLevel() > logging.INFO:
            logging.getLogger("reqslice").setLevel(logging.INFO)
    try:
        return _run(plan, out, transport)
    finally:
        if handler is not None:
            logging.getLogger("reqslice").removeHandler(handler)
            handler.close()


def _run(plan: ExperimentPlan, out: Path | None, transport) -> ExperimentReport:
    m = load_model(plan.model)
    specs = _select(load_requirements(plan.requirements), plan.requirement_ids)
    for spec in specs:
        spec.check_against(m)
    suite = generate_test_suite(m, plan.tests, plan.seed, plan.steps)
    seed_input = suite[int(np.random.default_rng(plan.seed).integers(len(suite)))]
    log.info("model %s: %d blocks; suite of %d tests from seed %d; seed input %s",
             m.name, len(m.blocks), len(suite), plan.seed, seed_input.id)
    ctx = _Context(
        plan, m, {s.id: s for s in specs}, suite, seed_input,
        {s.id: original_fitness(m, s, suite) for s in specs},
        make_backend(plan.backend, m, specs, transport),
        (out / "slices") if out is not None else None,
    )
    jobs = plan_prompts(plan)
    workers = max(1, min(plan.workers, plan.backend.max_in_flight))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_cell, ctx, code, ctx.specs[rid], p) for code, rid, p in jobs]
        cells = [f.result() for f in futures]
    report = ExperimentReport(
        [c.code for c in plan.configs], [s.id for s in specs], plan.repetitions, plan.seed,
        len(suite), seed_input.id, m.name, len(m.blocks),
        {(c.config, c.requirement): c for c in cells},
    )
    log.info("%d slices: %d accurate, %d inaccurate, %d vacuous",
             report.slice_count, report.count(Outcome.ACCURATE), report.count(Outcome.INACCURATE),
             report.count(Outcome.VACUOUS))
    if out is not None:
        write_reports(report, out)
    return report


# ---------------------------------------------------------------- rendering


def _columns(r: ExperimentReport) -> list[tuple[str, str]]:
    return [(rid, lab) for rid in r.requirements for lab in r.labels]


def _cell_text(r: ExperimentReport, config: str, rid: str, label: str, kind: str) -> str:
    cell = r.cells.get((config, rid))
    s = cell.get(label) if cell is not None else None
    if s is None:
        return ERROR_MARK
    if kind == "accuracy":
        return s.mark
    return str(s.size) if s.outcome is Outcome.ACCURATE else "-"


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.1f}"


def _row_mean(r: ExperimentReport, config: str) -> float | None:
    sizes = [
        s.size for rid in r.requirements
        for s in (r.cells[(config, rid)].slices if (config, rid) in r.cells else [])
        if s.outcome is Outcome.ACCURATE
    ]
    return statistics.fmean(sizes) if sizes else None


def _col_mean(r: ExperimentReport, rid: str, label: str) -> float | None:
    sizes = []
    for config in r.configs:
        cell = r.cells.get((config, rid))
        s = cell.get(label) if cell else None
        if s is not None and s.outcome is Outcome.ACCURATE:
            sizes.append(s.size)
    return statistics.fmean(sizes) if sizes else None


def render_report(r: ExperimentReport, kind: str = "accuracy", fmt: str = "md") -> str:
    """Render the accuracy (marks) or size (block counts) table as markdown or CSV."""
    if kind not in ("accuracy", "size"):
        raise ValueError("kind must be 'accuracy' or 'size'")
    if fmt not in ("md", "csv"):
        raise ValueError("fmt must be 'md' or 'csv'")
    cols = _columns(r)
    rows = [[config] + [_cell_text(r, config, rid, lab, kind) for rid, lab in cols] for config in r.configs]
    if kind == "size":
        for row, config in zip(rows, r.configs):
            row.append(_fmt(_row_mean(r, config)))
        footer = ["mean"] + [_fmt(_col_mean(r, rid, lab)) for rid, lab in cols] + [_fmt(r.mean_accurate_size())]
    header = ["config"] + [f"{rid} {lab}" for rid, lab in cols] + (["AVG"] if kind == "size" else [])

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([h.replace(" ", "_") for h in header])
        w.writerows(rows)
        if kind == "size":
            w.writerow(footer)
        return buf.getvalue()

    title = "Slice accuracy" if kind == "accuracy" else "Size of accurate slices"
    lines = [
        f"# {title}: {r.model_name}",
        "",
        f"seed {r.seed}, {r.tests} test cases, constants taken from test {r.seed_test}, "
        f"{r.repetitions} repetition(s)",
        "",
        "| " + " | ".join(header) + " |",
        "|" + "---|" * len(header),
    ]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    if kind == "size":
        lines.append("| " + " | ".join(f"**{x}**" if i == 0 else x for i, x in enumerate(footer)) + " |")
        mean = r.mean_accurate_size()
        lines += ["", f"{len(r.accurate_sizes())} accurate slice(s); mean size {_fmt(mean)} of {r.model_size} blocks"
                  + (f" (reduction {r.model_size / mean:.1f}x)" if mean else "")]
    else:
        lines += ["", "✓ accurate, ✗ inaccurate, V vacuous, E error", "",
                  f"{r.slice_count} slices ({r.iteration_count} iteration, {r.union_count} union): "
                  f"{r.count(Outcome.ACCURATE)} ✓, {r.count(Outcome.INACCURATE)} ✗, "
                  f"{r.count(Outcome.VACUOUS)} V"]
    return "\n".join(lines) + "\n"


def write_reports(r: ExperimentReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind in ("accuracy", "size"):
        for fmt in ("md", "csv"):
            p = out / f"report_{kind}.{fmt}"
            p.write_text(render_report(r, kind, fmt), encoding="utf-8")
            written.append(p)
    return written


# ---------------------------------------------------------------- synthetic cassettes


def _perturb(sids: Sequence[int], pool: Sequence[int], rng: np.random.Generator, style: int) -> str:
    keep = [s for s in sids if rng.random() > 0.15]
    extra = [int(x) for x in rng.choice(pool, size=int(rng.integers(0, 3)), replace=False)] if len(pool) else []
    out = list(dict.fromkeys(keep + extra))
    if style == 0:
        return "Blocks: [" + ", ".join(map(str, out)) + "]"
    if style == 1:
        if len(out) < 2:
            return "The relevant block is " + ", ".join(map(str, out)) + "."
        return "The blocks needed are " + ", ".join(map(str, out[:-1])) + f", and {out[-1]}."
    if style == 2:
        return "Here is the list:\n" + "\n".join(f"- SID = {s}" for s in out)
    return f"Step 1 of 2 found the inputs.\nAnswer (model release 2024): [{', '.join(map(str, out))}]"


def synthesize_cassette(plan: ExperimentPlan, path, seed: int = 0) -> Cassette:
    """Record one noisy oracle-derived reply per prompt and repetition.

    Replies drop or add a few SIDs and vary in layout, standing in for a model
    whose answers are close to, but not exactly, a dataflow slice.
    """
    m = load_model(plan.model)
    specs = {s.id: s for s in load_requirements(plan.requirements)}
    rng = np.random.default_rng(seed)
    cas = Cassette(path)
    ts = "1970-01-01T00:00:00+00:00"
    for _, rid, prompt in plan_prompts(plan):
        truth = oracle_slice(m, specs[rid]).sids
        pool = [s for s in m.sids if s not in truth]
        for _ in range(plan.repetitions):
            cas.append(prompt.text, _perturb(truth, pool, rng, int(rng.integers(4))), ts)
    return cas
