import pytest

from reqslice.data import data_path
from reqslice.evaluate import generate_test_suite, load_requirements
from reqslice.model import Block, Connection, Model, load_model

SUITE_SEED = 7


@pytest.fixture(scope="session")
def tustin():
    return load_model(data_path("tustin.json"))


@pytest.fixture(scope="session")
def excerpt():
    return load_model(data_path("tustin_limits_excerpt.json"))


@pytest.fixture(scope="session")
def blender():
    return load_model(data_path("effector_blender.json"))


@pytest.fixture(scope="session")
def tustin_reqs():
    return load_requirements(data_path("tustin_requirements.json"))


@pytest.fixture(scope="session")
def req_by_id(tustin_reqs):
    return {r.id: r for r in tustin_reqs}


@pytest.fixture(scope="session")
def suite(tustin):
    return generate_test_suite(tustin, 40, SUITE_SEED)


def chain(*types_params, name="chain", ranges=None):
    """Linear model Inport -> blocks... -> Outport with SIDs 1, 2, ..."""
    blocks = [Block(1, "u", "Inport", {}, (0, 0, 30, 14))]
    for i, (t, p) in enumerate(types_params, start=2):
        blocks.append(Block(i, f"b{i}", t, dict(p), (0, 0, 30, 30)))
    out = len(blocks) + 1
    blocks.append(Block(out, "y", "Outport", {}, (0, 0, 30, 14)))
    conns = [Connection(i, 1, i + 1, 1) for i in range(1, out)]
    return Model(name, 1.0, tuple(blocks), tuple(conns), ranges or {"u": (-1.0, 1.0)})


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
