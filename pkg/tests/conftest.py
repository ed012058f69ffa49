import pytest

from graphon_kuramoto import freqdist


@pytest.fixture(scope="session")
def uniform():
    return freqdist.uniform_model()


@pytest.fixture(scope="session")
def cosine():
    return freqdist.arcsine_cosine_model()


@pytest.fixture(scope="session")
def cauchy():
    return freqdist.cauchy_like_model()
