from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pfminimax.oracles import (  # noqa: E402
    Box,
    ColumnBallProduct,
    Interval,
    L2Ball,
    NuclearBall,
    Product,
    Simplex,
)


def set_families():
    """One representative of each feasible-set family."""
    return {
        "simplex": Simplex(5),
        "box": Box([-1.0, 0.0, 0.5], [1.0, 2.0, 0.75]),
        "interval": Interval(0.0, 2.0),
        "l2ball": L2Ball([1.0, -0.5, 0.0, 2.0], 1.5),
        "nuclear": NuclearBall(4, 3, 2.0),
        "column_balls": ColumnBallProduct(3, 4, 1.0),
        "product": Product([Simplex(3), Interval(0.0, 1.0), L2Ball([0.0, 0.0], 1.0)]),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
