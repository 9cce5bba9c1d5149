import numpy as np
import pytest

from covdetect.config import ExperimentConfig
from covdetect.pilot import build_pilot_book


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def paper_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def paper_book(paper_config):
    c = paper_config
    return build_pilot_book(c.N, c.L, c.delta, c.power)
