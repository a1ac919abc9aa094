import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ORACLES = json.loads((Path(__file__).parent / "oracles" / "oracles.json").read_text())


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


def cplx(v) -> complex:
    return complex(v[0], v[1])
