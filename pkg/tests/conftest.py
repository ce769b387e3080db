import logging

import numpy as np
import pytest

from multitask.domain import CompositionGrid
from multitask.groundtruth import ChallengeSpec

logging.getLogger("multitask").setLevel(logging.ERROR)


@pytest.fixture(scope="session")
def grid() -> CompositionGrid:
    return CompositionGrid.default()


@pytest.fixture(scope="session")
def challenge1() -> ChallengeSpec:
    return ChallengeSpec.for_challenge(1)


@pytest.fixture(scope="session")
def challenge2() -> ChallengeSpec:
    return ChallengeSpec.for_challenge(2)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
