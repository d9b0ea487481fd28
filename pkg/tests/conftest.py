import numpy as np
import pytest

from fcaz import Scenario, build_grid
from fcaz.roadnet import Link, RoadNet


@pytest.fixture
def cell_net():
    """2x2 grid: 12 links, zoi on a top boundary link."""
    return build_grid(2, 2, 100.0, [13.89, 13.89], 0).with_zoi({5})


@pytest.fixture
def cell_scenario():
    """Dense enough that the all-ON configuration meets a 0.8 target."""
    return Scenario(
        arrival_rate=0.5,
        duration=300.0,
        interval=300.0,
        tx=100.0,
        seeding_fraction=0.5,
        rng_seed=7,
        s_des=0.8,
        network={"grid": {"rows": 2, "cols": 2}},
    )


def corridor(n_links: int, length: float = 100.0, speed: float = 10.0) -> RoadNet:
    links = [
        Link(id=i, endpoints=((i * length, 0.0), ((i + 1) * length, 0.0)),
             speed_limit=speed)
        for i in range(n_links)
    ]
    return RoadNet.from_links(links)


@pytest.fixture
def corridor3():
    return corridor(3)


def assert_az_equal(a, b):
    assert tuple(a.bits) == tuple(b.bits)


def rng_for(test_seed: int) -> np.random.Generator:
    return np.random.default_rng(test_seed)
