import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

import oracles  # noqa: E402

from hitenrich import ScoredDataset  # noqa: E402


@pytest.fixture
def toy40() -> ScoredDataset:
    return ScoredDataset(
        np.array(oracles.TOY40_ACTIVITY),
        {"a": np.array(oracles.TOY40_S1), "b": np.array(oracles.TOY40_S2)},
    )


@pytest.fixture
def toy12() -> ScoredDataset:
    return ScoredDataset(
        np.array(oracles.TOY_ACTIVITY),
        {"a": np.array(oracles.TOY_S1), "b": np.array(oracles.TOY_S2)},
    )


def random_dataset(rng: np.random.Generator, n: int, k: int = 2, rho: float = 0.6, ties: bool = False) -> ScoredDataset:
    x = (rng.random(n) < 0.2).astype(int)
    x[0], x[1] = 1, 0
    z = rng.standard_normal((n, k))
    for j in range(1, k):
        z[:, j] = rho * z[:, 0] + np.sqrt(1 - rho**2) * z[:, j]
    z += x[:, None] * 1.0
    if ties:
        z = np.round(z, 1)
    return ScoredDataset(x, {f"s{j}": z[:, j] for j in range(k)})


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    if acceptance_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_report.LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
