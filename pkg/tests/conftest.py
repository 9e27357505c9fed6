from __future__ import annotations

import numpy as np
import pytest

from cliffgauge.geometry import ETA
from cliffgauge.multivector import NBLADES, Multivector


def random_metric(rng: np.random.Generator, spread: float = 0.3) -> np.ndarray:
    """Random symmetric signature-(1,3) metric ``e^T eta e`` with a well-conditioned ``e``."""
    e = np.eye(4) + spread * rng.uniform(-1, 1, (4, 4))
    e[0] *= rng.uniform(0.5, 2.0)
    return e.T @ ETA @ e


def random_mv(rng: np.random.Generator, scale: float = 1.0) -> Multivector:
    return Multivector(scale * rng.uniform(-1, 1, NBLADES))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20261019)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
