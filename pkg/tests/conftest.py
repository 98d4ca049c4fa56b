import pytest

from timeops.su11_fock import ModelParams

K_VALUES = (0.8, 1.25, 3.0)
G_VALUES = (0.5, 2.0, 8.0)


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture(params=K_VALUES, ids=lambda k: f"k={k}")
def params_k(request):
    return ModelParams.from_k(request.param)
