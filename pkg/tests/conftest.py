import numpy as np
import pytest

from advdialog.domain import generate_world, load_ontology
from advdialog.domain.ontology import parse_ontology
from advdialog.env import DialogueEnv, RewardConfig


@pytest.fixture(scope="session")
def ontology():
    return load_ontology()


@pytest.fixture(scope="session")
def world(ontology):
    return generate_world(7, 300, ontology=ontology)


@pytest.fixture
def env(ontology, world):
    kb, goals = world
    return DialogueEnv(ontology, kb, goals, RewardConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


TINY_ONTOLOGY = """advdialog-ontology v1
moviename | IR | a|b|c
date | IR | today|tomorrow
city | IR | x|y
ticket | IR | *
taskcomplete | IR | *
"""


@pytest.fixture
def tiny_ontology():
    return parse_ontology(TINY_ONTOLOGY.splitlines(), strict=False)


@pytest.fixture(scope="session")
def senv(ontology, world):
    """Shared environment for property tests; every use starts with reset()."""
    kb, goals = world
    return DialogueEnv(ontology, kb, goals, RewardConfig())
