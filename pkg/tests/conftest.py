import numpy as np
import pytest

from kpzlab import _backend


@pytest.fixture(params=sorted(_backend.available()))
def backend(request):
    """Run a test once per importable kernel backend."""
    previous = _backend.core
    _backend.use(request.param)
    yield request.param
    _backend.core = previous


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
