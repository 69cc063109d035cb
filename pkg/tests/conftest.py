import pytest

from auctionbench import AuctionSetting, make_item_distribution


@pytest.fixture
def d2():
    return make_item_distribution([1, 2], [0.5, 0.5])


@pytest.fixture
def d3():
    return make_item_distribution([4, 5, 10], [0.6, 0.2, 0.2])


@pytest.fixture
def point_mass():
    return make_item_distribution([1], [1.0])


@pytest.fixture
def setting_d2(d2):
    return AuctionSetting(items=(d2,), n=1, n_prime=2)


@pytest.fixture
def setting_d3(d3):
    return AuctionSetting(items=(d3,), n=1, n_prime=2)


@pytest.fixture
def setting_two_items(d2):
    return AuctionSetting(items=(d2, d2), n=1, n_prime=2)
