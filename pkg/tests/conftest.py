import pytest

from fairy.datasets import TOY_FEED, toy_graph


@pytest.fixture(scope="session")
def toy():
    return toy_graph()


@pytest.fixture(scope="session")
def toy_feed():
    return TOY_FEED
