import pytest

from qrabi.model import ModelParams


@pytest.fixture
def default_params():
    return ModelParams(omega=1.0, omega0=1.0, g=0.99, delta=0.0)
