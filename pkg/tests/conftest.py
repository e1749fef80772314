import pytest

from pgq import fixtures
from pgq.graph import encode_relational


@pytest.fixture(scope="session")
def bike():
    return fixtures.bike_graph()


@pytest.fixture(scope="session")
def bike_struct(bike):
    return encode_relational(bike)


@pytest.fixture(scope="session")
def social():
    return fixtures.social_graph()


@pytest.fixture(scope="session")
def db():
    return fixtures.bike_database()
