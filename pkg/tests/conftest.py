import numpy as np
import pytest

from su2kms import ModelConfig, build_all_sectors, diagonalize, laddered_systems


@pytest.fixture(scope="session")
def config6():
    return ModelConfig(n_sites=6)


@pytest.fixture(scope="session")
def config8():
    return ModelConfig(n_sites=8)


@pytest.fixture(scope="session")
def sectors6():
    return build_all_sectors(6)


@pytest.fixture(scope="session")
def sectors8():
    return build_all_sectors(8)


@pytest.fixture(scope="session")
def family6(config6):
    return laddered_systems(config6)


@pytest.fixture(scope="session")
def family8(config8):
    return laddered_systems(config8)


@pytest.fixture(scope="session")
def system12_m0():
    return diagonalize(ModelConfig(n_sites=12), 0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
