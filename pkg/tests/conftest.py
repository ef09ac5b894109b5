import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_ball_point(rng, n, radius=0.9):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return radius * rng.random() ** (1 / (2 * n)) * v / np.linalg.norm(v)


CRITERIA = {}


def record_criterion(number, ok, detail):
    """Store and print one acceptance line."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print("\n" + line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
