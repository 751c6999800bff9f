import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from couplersim.params import (  # noqa: E402
    sample_circuit_params,
    sample_three_junction_params,
)


@pytest.fixture(scope="session")
def sample_params():
    return sample_circuit_params()


@pytest.fixture(scope="session")
def sample_params_3j():
    return sample_three_junction_params()
