import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinner.vehicle import VehicleParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_quat(rng):
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)
