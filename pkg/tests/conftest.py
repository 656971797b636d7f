import time

import pytest

from wandering import seed_polynomial
from wandering.dendrite import approximate_loop
from wandering.perturbation import build_chain
from wandering.puzzle import build_puzzle
from wandering.rays import build_standard_regions


@pytest.fixture(scope="session")
def seed():
    return seed_polynomial()


@pytest.fixture(scope="session")
def seed_regions(seed):
    return build_standard_regions(seed)


@pytest.fixture(scope="session")
def chain():
    """f0..f3 on the default schedule; the slowest fixture (about a minute and a half)."""
    t0 = time.perf_counter()
    rec = build_chain(3, (1, 2, 3))
    rec.seconds = time.perf_counter() - t0
    return rec


@pytest.fixture(scope="session")
def chain_loops(chain):
    return [approximate_loop(m.f, 2048, 1e-4) for m in chain.members]


@pytest.fixture(scope="session")
def seed_puzzle(seed):
    return build_puzzle(seed, 8)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
