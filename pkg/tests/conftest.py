import numpy as np
import pytest

from sklab.cadlag import CadlagPath


def random_step_path(rng, max_jumps=6, dim=1, scale=3.0, grid=None):
    """Random step path; jump times on a grid of the given size when ``grid`` is set."""
    k = int(rng.integers(0, max_jumps + 1))
    if grid:
        t = np.sort(rng.choice(np.arange(1, grid + 1), size=min(k, grid), replace=False)) / grid
    else:
        t = np.unique(rng.uniform(0.01, 1.0, size=k))
    v = rng.uniform(-scale, scale, size=(t.size, dim)).round(3)
    v0 = rng.uniform(-scale, scale, size=dim).round(3)
    return CadlagPath(t, v, v0)


def random_monotone_path(rng, max_jumps=6, grid=None):
    k = int(rng.integers(0, max_jumps + 1))
    if grid:
        t = np.sort(rng.choice(np.arange(1, grid + 1), size=min(k, grid), replace=False)) / grid
    else:
        t = np.unique(rng.uniform(0.01, 1.0, size=k))
    steps = rng.uniform(0.0, 2.0, size=t.size).round(3)
    v0 = float(rng.uniform(-2, 2))
    return CadlagPath(t, (v0 + np.cumsum(steps))[:, None], [v0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
