from pathlib import Path

import numpy as np
import pytest

from nashanneal import BimatrixGame

REPO_ROOT = Path(__file__).resolve().parent.parent
INSTANCES = REPO_ROOT / "instances"


@pytest.fixture
def bos() -> BimatrixGame:
    return BimatrixGame.from_lists("bos", [[2, 0], [0, 1]], [[1, 0], [0, 2]])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def random_game(rng: np.random.Generator, n: int, m: int, high: int = 10, name: str = "rand") -> BimatrixGame:
    m_mat = rng.integers(0, high, size=(n, m))
    n_mat = rng.integers(0, high, size=(n, m))
    return BimatrixGame.from_lists(name, m_mat.tolist(), n_mat.tolist())
