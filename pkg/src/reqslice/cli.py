"""Command-line front end.

Exit codes::

    0   success (evaluate: slice is accurate)
    1   an input file could not be parsed
    2   usage error
    3   backend failure (network, credentials, missing cassette entry)
    4   slice could not be built or simulated
    5   prompt exceeds the token limit under --strict-tokens
    10  evaluate: slice is inaccurate
    11  evaluate: slice is vacuous
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .backend import BackendConfig, BackendError, make_backend, parse_block_list
from .evaluate import (
    MissingRange,
    Outcome,
    generate_test_suite,
    load_requirements,
    load_test_suite,
    save_test_suite,
    verdict,
)
from .experiment import load_plan, run_experiment
from .expr import ExprError, UnknownSignal
from .model import ModelError, load_model
from .prompt import PromptConfig, Strategy, TokenBudgetWarning, build_prompt, check_token_budget, load_training_examples
from .simulate import SimulationError
from .slicer import build_slice, load_slice, write_slice
from .textualize import InvalidModel, Verbosity, textualize

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_BUILD = 4
EXIT_TOKENS = 5
EXIT_INACCURATE = 10
EXIT_VACUOUS = 11

PARSE_ERRORS = (ModelError, ExprError, json.JSONDecodeError, KeyError, FileNotFoundError, InvalidModel, MissingRange)

log = logging.getLogger("reqslice")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _verbosity(text: str) -> Verbosity:
    try:
        return Verbosity.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _strategy(text: str) -> Strategy:
    try:
        return Strategy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _const_at(text: str):
    if text in ("step", "mean", "last"):
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--const-at takes step, mean, last or a step index") from None


def _pick_requirement(path, req_id: str | None):
    reqs = load_requirements(path)
    if req_id is None:
        if len(reqs) != 1:
            raise CliError(EXIT_USAGE, f"{path} holds {len(reqs)} requirements; choose one with --req-id")
        return reqs[0], reqs
    for s in reqs:
        if s.id == req_id:
            return s, reqs
    raise CliError(EXIT_USAGE, f"no requirement {req_id!r} in {path}; known: {', '.join(s.id for s in reqs)}")


def _prompt_for(args, m, req):
    n = 0 if args.strategy is Strategy.ZERO_SHOT else args.n_examples
    examples = []
    if n:
        if not args.examples:
            raise CliError(EXIT_USAGE, f"{args.strategy.name} prompts need --examples")
        examples = load_training_examples(args.examples, args.verbosity)[:n]
    cfg = PromptConfig(args.verbosity, args.strategy, n, args.token_limit)
    p = build_prompt(textualize(m, args.verbosity), req.text, cfg, examples)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TokenBudgetWarning)
        status = check_token_budget(p)
    if not status.ok:
        msg = f"prompt is ~{p.token_estimate} tokens, {status.overage} over the limit of {cfg.token_limit}"
        if args.strict_tokens:
            raise CliError(EXIT_TOKENS, msg)
        print(f"warning: {msg}", file=sys.stderr)
    return p


def _suite(args, m):
    if getattr(args, "suite", None):
        return load_test_suite(args.suite)
    return generate_test_suite(m, args.tests, args.seed, args.steps)


# ---------------------------------------------------------------- commands


def cmd_textualize(args) -> int:
    sys.stdout.write(textualize(load_model(args.model), args.verbosity))
    return EXIT_OK


def cmd_prompt(args) -> int:
    m = load_model(args.model)
    req, _ = _pick_requirement(args.requirements, args.req_id)
    p = _prompt_for(args, m, req)
    sys.stdout.write(p.text + "\n")
    print(f"[{p.config.code}, ~{p.token_estimate} tokens]", file=sys.stderr)
    return EXIT_OK


def cmd_slice(args) -> int:
    m = load_model(args.model)
    req, reqs = _pick_requirement(args.requirements, args.req_id)
    req.check_against(m)
    p = _prompt_for(args, m, req)
    bcfg = _backend_config(args)
    try:
        backend = make_backend(bcfg, m, reqs)
        reply = backend.complete(p, args.iteration)
    except BackendError as exc:
        raise CliError(EXIT_BACKEND, f"{type(exc).__name__}: {exc}") from exc
    try:
        bl = parse_block_list(reply, m, bcfg.kind, args.iteration)
    except BackendError as exc:
        raise CliError(EXIT_BACKEND, f"{type(exc).__name__}: {exc}") from exc
    if bl.ignored:
        print(f"ignored non-SID integers: {list(bl.ignored)}", file=sys.stderr)
    suite = _suite(args, m)
    seed_input = suite[int(np.random.default_rng(args.seed).integers(len(suite)))]
    try:
        s = build_slice(m, bl, seed_input, args.const_at, req.id)
    except (SimulationError, ValueError) as exc:
        raise CliError(EXIT_BUILD, f"cannot build slice: {exc}") from exc
    out = Path(args.out or f"{Path(args.model).stem}_{req.id}_slice.json")
    prov = write_slice(s, out)
    print(
        f"kept={len(s.kept_sids)} edge_cases={len(s.edge_case_sids)} constants={len(s.constant_fixes)} "
        f"blocks={s.size} seed_input={seed_input.id} -> {out} (+ {prov.name})"
    )
    return EXIT_OK


def _backend_config(args) -> BackendConfig:
    base = dict(args.backend_defaults or {})
    base["kind"] = args.backend or base.get("kind", "oracle")
    for key in ("url", "model_name", "cassette", "temperature"):
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    try:
        return BackendConfig.from_dict(base)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def cmd_evaluate(args) -> int:
    m = load_model(args.model)
    s = load_slice(args.slice)
    req, _ = _pick_requirement(args.requirements, args.req_id)
    suite = _suite(args, m)
    try:
        v = verdict(m, s, req, suite)
    except SimulationError as exc:
        raise CliError(EXIT_BUILD, f"slice does not simulate: {exc}") from exc
    print(f"{v.outcome.symbol} {v.outcome.name.lower()}" + (f": {v.reason}" if v.reason else ""))
    for tid, fo, fs in v.per_test:
        print(f"  {tid} original={fo} slice={'missing' if fs is None else fs}")
    return {Outcome.ACCURATE: EXIT_OK, Outcome.INACCURATE: EXIT_INACCURATE, Outcome.VACUOUS: EXIT_VACUOUS}[v.outcome]


def cmd_gen_tests(args) -> int:
    m = load_model(args.model)
    suite = generate_test_suite(m, args.tests, args.seed, args.steps)
    if args.out:
        save_test_suite(suite, args.out, args.seed)
        print(f"{len(suite)} test cases -> {args.out}")
    else:
        json.dump({"seed": args.seed, "tests": [t.to_dict() for t in suite]}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return EXIT_OK


def cmd_experiment(args) -> int:
    plan = load_plan(args.plan)
    if args.seed_given:
        plan.seed = args.seed
    try:
        r = run_experiment(plan, args.out)
    except BackendError as exc:
        raise CliError(EXIT_BACKEND, f"{type(exc).__name__}: {exc}") from exc
    print(
        f"{r.slice_count} slices ({r.iteration_count} iteration, {r.union_count} union): "
        f"{r.count(Outcome.ACCURATE)} accurate, {r.count(Outcome.INACCURATE)} inaccurate, "
        f"{r.count(Outcome.VACUOUS)} vacuous -> {args.out}"
    )
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed for test generation (default 0)")
    common.add_argument("--config", type=Path, help="JSON file with default option values")

    ap = argparse.ArgumentParser(prog="reqslice", description="Requirement-driven slicing of block-diagram models.")
    ap.add_argument("--seed", dest="top_seed", type=int, default=None, help="random seed (default 0)")
    ap.add_argument("--config", type=Path, help="JSON file with default option values")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def tests_opts(p):
        p.add_argument("--tests", type=int, default=40, help="test suite size (default 40)")
        p.add_argument("--steps", type=int, default=50, help="steps per test case (default 50)")
        p.add_argument("--suite", type=Path, help="use a saved test suite instead of generating one")

    def prompt_opts(p):
        p.add_argument("model", type=Path)
        p.add_argument("requirements", type=Path)
        p.add_argument("--req-id")
        p.add_argument("--verbosity", type=_verbosity, default=Verbosity.MEDIUM)
        p.add_argument("--strategy", type=_strategy, default=Strategy.ZERO_SHOT)
        p.add_argument("--examples", type=Path, help="training examples file (CT and NS)")
        p.add_argument("--n-examples", type=int, default=1)
        p.add_argument("--token-limit", type=int, default=128_000)
        p.add_argument("--strict-tokens", action="store_true", help="fail when the prompt exceeds the limit")

    p = sub.add_parser("textualize", parents=[common], help="print a model as text")
    p.add_argument("model", type=Path)
    p.add_argument("--verbosity", type=_verbosity, default=Verbosity.MEDIUM, help="high, medium or low")
    p.set_defaults(func=cmd_textualize)

    p = sub.add_parser("prompt", parents=[common], help="print the slicing prompt for a requirement")
    prompt_opts(p)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("slice", parents=[common], help="query a backend and build an executable slice")
    prompt_opts(p)
    tests_opts(p)
    p.add_argument("--backend", choices=("oracle", "replay", "live"))
    p.add_argument("--cassette", help="recorded replies (replay) or file to record into (live)")
    p.add_argument("--url", help="chat-completions endpoint (live)")
    p.add_argument("--model-name", help="model name sent to the endpoint (live)")
    p.add_argument("--temperature", type=float)
    p.add_argument("--iteration", type=int, default=0, help="repetition index to request")
    p.add_argument("--const-at", type=_const_at, default="step", metavar="{step,mean,last,N}")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("evaluate", parents=[common], help="judge a slice against the original model")
    p.add_argument("model", type=Path)
    p.add_argument("slice", type=Path)
    p.add_argument("requirements", type=Path)
    p.add_argument("--req-id")
    tests_opts(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen-tests", parents=[common], help="generate a diverse test suite")
    p.add_argument("model", type=Path)
    p.add_argument("-n", "--tests", type=int, default=40)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_gen_tests)

    p = sub.add_parser("experiment", parents=[common], help="run a configuration grid from a plan file")
    p.add_argument("plan", type=Path)
    p.add_argument("--out", type=Path, default=Path("results"))
    p.set_defaults(func=cmd_experiment)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    try:
        doc = json.loads(known.config.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliError(EXIT_PARSE, f"config {known.config} must hold a JSON object")
    converters = {"verbosity": _verbosity, "strategy": _strategy, "const_at": _const_at}
    values = {}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest == "backend" and isinstance(value, dict):
            values["backend_defaults"] = value
            continue
        values[dest] = converters[dest](str(value)) if dest in converters else value
    ap.set_defaults(**values)
    for action in ap._subparsers._group_actions:  # subcommand parsers keep their own defaults
        for subparser in action.choices.values():
            subparser.set_defaults(**values)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    try:
        _apply_config(ap, argv)
    except CliError as exc:
        print(f"reqslice: {exc}", file=sys.stderr)
        return exc.code
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.seed is None:
        args.seed = args.top_seed
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if not hasattr(args, "backend_defaults"):
        args.backend_defaults = None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"reqslice: {exc}", file=sys.stderr)
        return exc.code
    except BackendError as exc:
        print(f"reqslice: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except UnknownSignal as exc:
        print(f"reqslice: unknown signal {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PARSE_ERRORS as exc:
        print(f"reqslice: cannot parse input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SimulationError as exc:
        print(f"reqslice: {exc}", file=sys.stderr)
        return EXIT_BUILD


if __name__ == "__main__":
    sys.exit(main())
