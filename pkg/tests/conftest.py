import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from symgame.generators import random_layered_game  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_game(rng):
    """H=2, layers (1, 2), n=2, stochastic transitions."""
    return random_layered_game([1, 2], 2, rng)


@pytest.fixture
def three_layer_game(rng):
    return random_layered_game([1, 2, 2], 2, rng)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
