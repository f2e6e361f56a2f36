# tests/conftest.py
import pytest

from restoration_engine import mdp
from restoration_engine.instance_gen import generate_instance
from restoration_engine.models import GenerationConfig, Region
from restoration_engine.network import Instance


@pytest.fixture(autouse=True)
def feasibility_checks(monkeypatch):
    """Every state built during a test is checked against the feasibility rules."""
    monkeypatch.setattr(mdp, "DEBUG_CHECKS", True)


@pytest.fixture
def chain3() -> Instance:
    """Path 1 -> 2 -> 3 on a line, depot on node 2's spot, p = 0.5, s = 1."""
    return Instance.from_points(
        [None, None, 1, 2],
        [(1.0, 0.0), (0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
        repair_time=1.0,
        fault_prob=0.5,
    )


@pytest.fixture
def crossing_star() -> Instance:
    """Source far from four leaves placed on the corners of a 2x2 square."""
    return Instance.from_points(
        [None, None, 1, 1, 1, 1],
        [(0.0, -2.0), (5.0, 5.0), (0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)],
        repair_time=1.0,
        fault_prob=0.5,
    )


def random_instance(seed: int, nodes: int, fault_prob: float = 0.5, repair_time: float = 1.0):
    config = GenerationConfig(
        nodes=nodes,
        region=Region.square(10.0),
        repair_time=repair_time,
        fault_prob=fault_prob,
        seed=seed,
    )
    return generate_instance(config)


@pytest.fixture
def make_instance():
    return random_instance
