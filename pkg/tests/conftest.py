import numpy as np
import pytest

from cbdiv import backend


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def _available_backends():
    names = ["numpy"]
    if backend.NUMBA_AVAILABLE:
        names.append("numba")
    return names


@pytest.fixture(params=_available_backends())
def each_backend(request):
    """Run the decorated test under every available kernel backend."""
    previous = backend.active()
    backend.use(request.param)
    yield request.param
    backend.use(previous)


def random_dataset(rng, n, d_x=1, d_y=1, d_z=1, tie_stress=False):
    from cbdiv import Dataset

    x = rng.standard_normal((n, d_x))
    if tie_stress and n >= 4:
        x[1] = x[0]
        x[-1] = x[-2]
    return Dataset(
        x=x,
        y=rng.standard_normal((n, d_y)),
        z=rng.standard_normal((n, d_z)),
    )
