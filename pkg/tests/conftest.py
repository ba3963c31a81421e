import numpy as np
import pytest
from hypothesis import settings

from invertcert.geometry import Polytope
from invertcert.sampling import SamplingPlan

settings.register_profile("ci", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("ci")


def random_polytope(rng: np.random.Generator, n: int, k: int | None = None) -> Polytope:
    k = k or int(rng.integers(1, 2 * n + 4))
    return Polytope.hull(rng.normal(size=(k, n)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def plan():
    return SamplingPlan()


@pytest.fixture(scope="session")
def small_plan():
    # fewer pairs; used where only coarse accuracy is asserted
    return SamplingPlan(pairs_per_radius=64)
