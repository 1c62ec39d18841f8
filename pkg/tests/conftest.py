import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from xoverdesign import ExactDesign

settings.register_profile(
    "default",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def exact_designs(draw, t_max=4, k_max=5, n_max=8):
    t = draw(st.integers(2, t_max))
    k = draw(st.integers(2, k_max))
    n = draw(st.integers(1, n_max))
    rows = draw(
        st.lists(st.lists(st.integers(1, t), min_size=k, max_size=k), min_size=n, max_size=n)
    )
    return ExactDesign(np.array(rows), t)


@st.composite
def permutations_of(draw, t):
    return tuple(draw(st.permutations(range(1, t + 1))))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, failures: list[str], n_checks: int) -> str:
    status = "PASS" if not failures else "FAIL"
    line = f"[{status}] criterion {number}: {title} ({n_checks - len(failures)}/{n_checks} checks)"
    if failures:
        line += "; failing: " + "; ".join(failures)
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
