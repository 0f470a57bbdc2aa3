import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quadgeo.model import VehicleParams

settings.register_profile(
    "quadgeo", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("quadgeo")


@pytest.fixture
def params():
    return VehicleParams()


def random_rotation(rng):
    # uniform on SO(3) via QR of a Gaussian matrix
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
