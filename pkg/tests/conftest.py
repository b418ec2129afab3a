import numpy as np
import pytest

from ropack.core import Instance, PackingOption


def one_bin(items, capacity=1.0):
    """Single-bin d=1 instance from (weight, profit) pairs."""
    opts = [{0: PackingOption((w,), p)} for w, p in items]
    return Instance.from_options([[capacity]], opts)


@pytest.fixture
def three_items():
    # (w, p) = (1, 1), (0.4, 0.5), (0.5, 0.6) in one unit bin
    return one_bin([(1.0, 1.0), (0.4, 0.5), (0.5, 0.6)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
