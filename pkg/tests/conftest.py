import sys

import numpy as np
import pytest

from lnecone.variety import uniforms


def circle_points(n: int, seed: int = 42) -> np.ndarray:
    """Unit-circle sample with one uniform angle per arc of length 2*pi/n (jittered strata)."""
    u = uniforms(seed, 1.0, n, 1, salt=99)[:, 0]
    theta = 2 * np.pi * (np.arange(n) + u) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


@pytest.fixture
def circle():
    return circle_points


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
