import numpy as np
import pytest
from hypothesis import strategies as st

from occulaw.core import validate_generator

G_LEFT = [[-3, 1, 2], [2, -3, 1], [1, 2, -3]]
G_RIGHT = [[-0.4, 0.2, 0.2], [0.3, -0.6, 0.3], [0.5, 0.5, -1.0]]


@pytest.fixture
def g_left():
    return validate_generator(G_LEFT)


@pytest.fixture
def g_right():
    return validate_generator(G_RIGHT)


def random_generator(rng, m, low=0.1, high=2.0):
    M = rng.uniform(low, high, size=(m, m))
    np.fill_diagonal(M, 0.0)
    np.fill_diagonal(M, -M.sum(axis=1))
    return validate_generator(M)


@st.composite
def generators(draw, min_m=2, max_m=6, low=0.05, high=5.0):
    m = draw(st.integers(min_m, max_m))
    rates = draw(
        st.lists(
            st.floats(low, high, allow_nan=False, allow_infinity=False),
            min_size=m * m,
            max_size=m * m,
        )
    )
    M = np.array(rates).reshape(m, m)
    np.fill_diagonal(M, 0.0)
    np.fill_diagonal(M, -M.sum(axis=1))
    return validate_generator(M)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
