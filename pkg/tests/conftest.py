import numpy as np
import pytest
from hypothesis import strategies as st

from tsptw_lookahead.datagen import MediumParams, gen_medium


def medium_instance(n: int, seed: int):
    return gen_medium(MediumParams(n), 1, seed)[0].instance


@st.composite
def instances(draw, min_n=2, max_n=9):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**31 - 1))
    return medium_instance(n, seed)


@st.composite
def instance_and_prefix(draw, min_n=2, max_n=9, full=False):
    inst = draw(instances(min_n, max_n))
    perm = draw(st.permutations(list(range(1, inst.n + 1))))
    k = inst.n if full else draw(st.integers(0, inst.n))
    return inst, [0, *perm[:k]]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report their verdicts here; printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
