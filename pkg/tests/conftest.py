import numpy as np
import pytest

from vrlatency import kernels
from vrlatency.model import ScenarioConfig

_FUNCS = ("stream_ids", "uniforms", "geometric_variates", "gamma_variates",
          "draw_attempts", "draw_backhaul", "upload_maxima")


def available_backends():
    names = ["python"]
    try:
        kernels.load_backend("cython")
        names.append("cython")
    except ImportError:
        pass
    return names


@pytest.fixture
def reference_cfg():
    return ScenarioConfig.from_db(20.0, 30.0)


@pytest.fixture(params=available_backends())
def backend(request, monkeypatch):
    """Run the test once per kernel backend."""
    impl = kernels.load_backend(request.param)
    for name in _FUNCS:
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    monkeypatch.setattr(kernels, "BACKEND", impl.BACKEND)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
