"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import contextlib
import json
import re
import time
from pathlib import Path

import numpy as np
import pytest

from reqslice.backend import BlockList, oracle_slice
from reqslice.cli import main
from reqslice.data import data_path
from reqslice.evaluate import Outcome, generate_test_suite, original_fitness, verdict
from reqslice.experiment import ExperimentPlan, synthesize_cassette
from reqslice.expr import parse_expr, robustness
from reqslice.model import errors_only, validate
from reqslice.simulate import TestCase, simulate
from reqslice.slicer import augment_edge_cases, build_slice
from reqslice.textualize import textualize

from conftest import ACCEPTANCE, chain
from exprgen import brute, random_bool, random_trace

GOLDEN = Path(__file__).parent / "golden"


@contextlib.contextmanager
def criterion(n, title):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        ACCEPTANCE.append(f"FAIL  AC{n}  {title}")
        print(f"FAIL  AC{n}  {title}")
        raise
    dt = time.perf_counter() - t0
    ACCEPTANCE.append(f"PASS  AC{n}  {title}  ({dt:.1f}s)")
    print(f"PASS  AC{n}  {title}")


def test_ac1_soundness_random_blocklists(tustin, suite):
    with criterion(1, "100 random block lists build valid slices that run 50 steps"):
        assert len(tustin.blocks) == 57
        rng = np.random.default_rng(2024)
        t0 = time.perf_counter()
        for _ in range(100):
            k = int(rng.integers(0, len(tustin.sids) + 1))
            bl = BlockList(tuple(int(s) for s in rng.choice(tustin.sids, size=k, replace=False)))
            seed = suite[int(rng.integers(len(suite)))]
            s = build_slice(tustin, bl, seed)
            assert errors_only(validate(s.model)) == []
            tr = simulate(s.model, TestCase(seed.inputs, 50))
            assert not s.model.blocks or tr.steps == 50
        assert time.perf_counter() - t0 < 10


def test_ac2_worked_example(tustin, suite):
    with criterion(2, "worked example: From 141/142 added, exactly 3 constant repairs"):
        bl = BlockList((89, 90, 96, 132, 140, 93, 99))
        closed = augment_edge_cases(tustin, bl)
        assert set(closed.sids) - set(bl.sids) == {141, 142}
        s = build_slice(tustin, bl, suite[0])
        assert s.edge_case_sids == {141, 142}
        assert len(s.constant_fixes) == 3
        # the Switch input plus the two signals that reach From 141 and From 142
        assert {(f.target, f.port) for f in s.constant_fixes} == {(96, 3), (132, 1), (140, 1)}
        assert {sid for f in s.constant_fixes for sid in f.feeds} == {141, 142}
        assert set(s.model.sids) == {89, 90, 96, 132, 140, 93, 99, 141, 142} | s.constant_sids


def test_ac3_oracle_end_to_end(tustin, tustin_reqs):
    with criterion(3, "oracle slices of all 5 requirements are accurate; mean size <= 1/3 of model"):
        t0 = time.perf_counter()
        suite = generate_test_suite(tustin, 40, seed=7)
        seed = suite[int(np.random.default_rng(7).integers(40))]
        sizes = []
        for r in tustin_reqs:
            s = build_slice(tustin, oracle_slice(tustin, r), seed, requirement=r.id)
            v = verdict(tustin, s, r, suite)
            assert v.outcome is Outcome.ACCURATE, (r.id, v.reason)
            sizes.append(s.size)
        mean = float(np.mean(sizes))
        print(f"  oracle slice sizes {sizes}, mean {mean:.1f} of {len(tustin.blocks)}")
        assert mean <= len(tustin.blocks) / 3
        assert time.perf_counter() - t0 < 30


def test_ac4_fitness_sign_semantics():
    with criterion(4, "robustness sign matches a brute-force boolean evaluator on 1000 pairs"):
        rng = np.random.default_rng(99)
        checked = boundary = 0
        for _ in range(1000):
            src, py = random_bool(rng)
            e = parse_expr(src)
            tr = random_trace(rng, 1)
            v = robustness(e, tr, 0)
            if abs(v) < 1e-9:
                boundary += 1
                continue
            assert (v > 0) == brute(py, tr, 0), src
            checked += 1
        assert checked >= 950
        # zero is a violation
        assert robustness(parse_expr("x <= 5 && x >= 5"), {"x": [5.0]}, 0) == 0.0
        print(f"  {checked} decided, {boundary} on the boundary")


def test_ac5_vacuity(tustin, tustin_reqs, suite):
    with criterion(5, "empty slice is vacuous, full slice is accurate for every triggered requirement"):
        empty = build_slice(tustin, BlockList(()), suite[0])
        full = build_slice(tustin, BlockList(tuple(tustin.sids)), suite[0])
        for r in tustin_reqs:
            assert verdict(tustin, empty, r, suite).outcome is Outcome.VACUOUS
            if any(f.triggered for f in original_fitness(tustin, r, suite)):
                assert verdict(tustin, full, r, suite).outcome is Outcome.ACCURATE


@pytest.fixture(scope="module")
def replay_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("accept")
    plan_doc = {
        "model": str(data_path("tustin.json")),
        "requirements": str(data_path("tustin_requirements.json")),
        "training_examples": str(data_path("training_examples.json")),
        "repetitions": 3,
        "tests": 40,
        "seed": 21,
        "backend": {"kind": "replay", "cassette": "cassette.jsonl"},
    }
    (tmp / "plan.json").write_text(json.dumps(plan_doc))
    synthesize_cassette(ExperimentPlan.from_dict(plan_doc, tmp), tmp / "cassette.jsonl", seed=21)
    codes = [main(["experiment", str(tmp / "plan.json"), "--out", str(tmp / f"run{i}")]) for i in (1, 2)]
    return tmp, codes


def test_ac6_grid_arithmetic(replay_runs):
    tmp, codes = replay_runs
    with criterion(6, "9 configs x 5 requirements x 3 repetitions give 135 + 45 = 180 slices"):
        assert codes == [0, 0]
        files = [p for p in (tmp / "run1" / "slices").glob("*.json") if not p.name.endswith(".prov.json")]
        names = [p.stem for p in files]
        iters = [n for n in names if re.search(r"_I[123]$", n)]
        unions = [n for n in names if n.endswith("_All")]
        assert (len(iters), len(unions), len(files)) == (135, 45, 180)
        for u in unions:
            stem = u[: -len("_All")]
            kept_u = set(json.loads((tmp / "run1" / "slices" / f"{u}.prov.json").read_text())["kept"])
            for k in (1, 2, 3):
                prov = tmp / "run1" / "slices" / f"{stem}_I{k}.prov.json"
                assert set(json.loads(prov.read_text())["kept"]) <= kept_u


def test_ac7_determinism(replay_runs):
    tmp, _ = replay_runs
    with criterion(7, "two experiment runs with the same plan, seed and cassette give identical CSVs"):
        for name in ("report_accuracy.csv", "report_size.csv"):
            a, b = (tmp / "run1" / name).read_bytes(), (tmp / "run2" / name).read_bytes()
            assert a and a == b


def test_ac8_textualizer_goldens(excerpt):
    with criterion(8, "excerpt goldens at three verbosities; medium = high minus positions; low = identity lines"):
        outs = {v: textualize(excerpt, v) for v in ("high", "medium", "low")}
        for v, text in outs.items():
            assert text == (GOLDEN / f"tustin_limits_{v}.txt").read_text()
        assert re.sub(r" position=\([\d,]+\)", "", outs["high"]) == outs["medium"]
        low = outs["low"].splitlines()
        assert all(re.fullmatch(r'block sid=\d+ name="[^"]*" type=\w+', line) for line in low[1:])
        assert len(low) - 1 == len(excerpt.blocks)


def test_ac9_simulator_conformance(tustin):
    with criterion(9, "unit delay, saturation, switch and trapezoidal integrator within 1e-12"):
        rng = np.random.default_rng(5)
        xs = rng.normal(size=30)
        tr = simulate(chain(("UnitDelay", {"initial": 0.25})), TestCase({"u": list(xs)}, 30))
        assert abs(tr["y"][0] - 0.25) <= 1e-12
        assert np.max(np.abs(tr["y"][1:] - xs[:-1])) <= 1e-12

        tr = simulate(chain(("Saturation", {"upper_limit": 5, "lower_limit": 0})), TestCase({"u": list(xs * 10)}, 30))
        assert np.max(np.abs(tr["y"] - np.clip(xs * 10, 0, 5))) <= 1e-12

        # Switch 96 passes the initial condition while reset is high
        for ctrl, pick in ((1.0, "a"), (0.0, "b")):
            t = TestCase({"xin": 0.0, "TL": 9.0, "BL": -9.0, "reset": ctrl, "ic": 3.5}, 10)
            out = simulate(tustin, t)["96:1"]
            expect = np.full(10, 3.5) if pick == "a" else np.zeros(10)
            assert np.max(np.abs(out - expect)) <= 1e-12

        u, T, steps = 1.0, 0.1, 10
        y, px, py = [], 0.0, 0.0
        for _ in range(steps):
            py = py + T / 2 * (u + px)
            px = u
            y.append(py)
        out = simulate(tustin, TestCase({"xin": u, "TL": 10, "BL": -10, "reset": 0, "ic": 0}, steps))["yout"]
        assert np.max(np.abs(out - np.array(y))) <= 1e-12
