import numpy as np
import pytest

from splitnas import DeviceProfile, WirelessProfile
from splitnas.mobo import SpaceConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def device():
    return DeviceProfile.default()


@pytest.fixture(scope="session")
def wireless_lte():
    return WirelessProfile.default("lte")


@pytest.fixture(scope="session")
def wireless_wifi():
    return WirelessProfile.default("wifi")


@pytest.fixture(scope="session")
def space():
    return SpaceConfig.default()
