import numpy as np
import pytest

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def square_corners():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


# small populations used by the oracle and Monte Carlo comparisons
SMALL_POPULATIONS = {
    "pair_equal": ([0.5, 0.5], [[0.0], [1.0]]),
    "pair_unequal": ([0.2, 0.8], [[0.0], [1.0]]),
    "square": ([0.5] * 4, square_corners()),
    "equilateral": ([1 / 3] * 3, [[0.0, 0.0], [1.0, 0.0], [0.5, 3**0.5 / 2]]),
    "line_unequal": ([0.2, 0.5, 0.3, 0.6, 0.4], [[0.0], [1.0], [2.5], [3.0], [4.5]]),
    "plane_six": (
        [0.1, 0.3, 0.6, 0.4, 0.2, 0.4],
        [[0.0, 0.0], [0.3, 0.1], [1.0, 0.2], [0.4, 0.9], [0.8, 0.8], [0.2, 0.5]],
    ),
    "non_integer_total": ([0.3, 0.45, 0.5, 0.25], [[0.0], [0.4], [1.1], [2.0]]),
    "grid_ties": ([0.5] * 6, [[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1]]),
}
