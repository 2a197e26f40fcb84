import numpy as np
import pytest

from bgkhydro.fields import MacroFields, eval_maxwellian
from bgkhydro.grid import make_grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid1():
    return make_grid(1, 16, 1.0, 128, 8.0)


@pytest.fixture
def wavy_state(grid1):
    x = grid1.x_nodes[:, 0]
    macro = MacroFields(1.0 + 0.2 * np.sin(2 * np.pi * x), 0.3 * np.cos(2 * np.pi * x), 1.0 + 0.1 * np.sin(4 * np.pi * x))
    return eval_maxwellian(macro, grid1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
