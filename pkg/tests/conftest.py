import numpy as np
import pytest

from affinepr import ensemble as E


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def micro():
    """n = m = 1, a = 1, b = 10, x = 1 (so y = 121)."""
    ens = E.from_rows([[1.0]], b=10.0)
    return ens, E.measure(ens, [1.0])


@pytest.fixture
def small_instance():
    """Gaussian n = 6, m = 30 with a moderate complex offset and a random iterate."""
    ens = E.gen_gaussian(6, 30, seed=3, b=2.0 + 1.0j)
    x = E.random_signal(6, 4)
    z = 2.0 * E.random_signal(6, 9)
    return ens, E.measure(ens, x), x, z
