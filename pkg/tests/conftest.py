import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_sym(rng, n, psd=False):
    M = rng.standard_normal((n, n))
    if psd:
        return M @ M.T / n
    return (M + M.T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
