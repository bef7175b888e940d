import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

from sustain_models import _backend  # noqa: E402

BACKENDS = [("python", _backend.python_kernels)]
if _backend.compiled_kernels is not None:
    BACKENDS.append(("compiled", _backend.compiled_kernels))


@pytest.fixture(params=[b[1] for b in BACKENDS], ids=[b[0] for b in BACKENDS])
def kernels(request, monkeypatch):
    """Run a test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
