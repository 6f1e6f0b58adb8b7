import numpy as np
import pytest
from hypothesis import strategies as st

ACCEPTANCE_LINES: list[str] = []


@st.composite
def hash_vectors(draw, min_m=1, max_m=3, max_total=0.95):
    """Valid strategic hash vectors: entries in (0, 0.5], total below ``max_total``."""
    m = draw(st.integers(min_m, max_m))
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m))
    total = draw(st.floats(0.02, max_total))
    a = np.asarray(w) / sum(w) * total
    return tuple(float(x) for x in np.clip(a, 1e-4, 0.5))


def random_alpha(rng, m, max_total=0.95):
    w = rng.uniform(0.05, 1.0, m)
    a = w / w.sum() * rng.uniform(0.05, max_total)
    return tuple(float(x) for x in np.clip(a, 1e-4, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
