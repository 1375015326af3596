import numpy as np
import pytest

from fitsink import BipartiteMatrix

from oracles import M_STAR, random_total_support


@pytest.fixture
def mstar():
    return BipartiteMatrix(M_STAR)


@pytest.fixture(scope="session")
def total_support_family():
    """Twenty LP-certified random binary matrices, at most 8 x 6, fixed seed."""
    return random_total_support(np.random.default_rng(0), 20)
