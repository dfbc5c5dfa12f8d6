import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from causal_bounds.data import Dataset  # noqa: E402


def random_dataset(rng: np.random.Generator, n: int = 40, k: int = 2) -> Dataset:
    """Small confounded dataset with both arms guaranteed present."""
    x = rng.standard_normal((n, k))
    p = 1 / (1 + np.exp(-(0.3 + x @ np.linspace(0.5, -0.3, k))))
    z = (rng.random(n) < p).astype(float)
    z[0], z[1] = 1.0, 0.0
    y = 1 + x @ np.linspace(1.0, 0.5, k) + 0.5 * z + rng.standard_normal(n)
    return Dataset(y, z, x)


@pytest.fixture
def four_unit():
    # treated y = (2, 0), control y = (5, 1)
    return Dataset([2.0, 0.0, 5.0, 1.0], [1, 1, 0, 0], [[0.0], [1.0], [0.0], [1.0]])


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
