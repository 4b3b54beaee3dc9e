import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)


def fresh_rng(seed: int = 20240810) -> np.random.Generator:
    return np.random.default_rng(seed)
