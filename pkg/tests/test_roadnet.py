import json
import math

import numpy as np
import pytest

from fcaz import build_grid, load_roadnet, save_roadnet
from fcaz.errors import NetworkFormatError, NetworkValidationError, ValidationError
from fcaz.roadnet import Link, RoadNet, drop_links


def grid_edge_count_oracle(rows, cols):
    """Count lattice edges by enumerating node pairs at unit distance."""
    nodes = [(i, j) for i in range(rows + 1) for j in range(cols + 1)]
    edges = 0
    for a in nodes:
        for b in nodes:
            if a < b and abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1:
                edges += 1
    return edges


def test_unit_cell_has_four_links():
    net = build_grid(1, 1, 100.0, [16.67, 16.67], 0)
    assert net.n == 4
    assert all(l.speed_limit == 16.67 for l in net.links)


def test_3x4_grid_has_31_links():
    net = build_grid(3, 4, 100.0, [10, 10], 0)
    assert net.n == 3 * (4 + 1) + 4 * (3 + 1) == 31
    assert net.n == grid_edge_count_oracle(3, 4)


@pytest.mark.parametrize("rows,cols", [(1, 1), (2, 3), (3, 5), (4, 2)])
def test_grid_link_count_formula(rows, cols):
    net = build_grid(rows, cols, 50.0, [5, 15], 3)
    assert net.n == rows * (cols + 1) + cols * (rows + 1)
    assert net.n == grid_edge_count_oracle(rows, cols)


def test_interior_intersection_joins_four_links():
    net = build_grid(2, 2, 100.0, [10, 10], 0)
    # the only interior node of a 2x2 grid is (100, 100)
    incident = [
        l.id for l in net.links
        if any(abs(p[0] - 100.0) < 1e-9 and abs(p[1] - 100.0) < 1e-9
               for p in l.endpoints)
    ]
    assert len(incident) == 4


def test_speed_limits_drawn_from_range():
    lo, hi = 5.56, 16.67   # the 20..60 km/h band
    net = build_grid(3, 5, 100.0, [lo, hi], 11)
    speeds = np.array([l.speed_limit for l in net.links])
    assert (speeds >= lo).all() and (speeds <= hi).all()
    assert speeds.std() > 0


def test_grid_deterministic_per_seed():
    a = build_grid(2, 3, 80.0, [5, 15], 9)
    b = build_grid(2, 3, 80.0, [5, 15], 9)
    assert a == b
    c = build_grid(2, 3, 80.0, [5, 15], 10)
    assert a != c


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(rows=0, cols=1, link_length=10, speed_limit_range=[1, 2], rng_seed=0),
        dict(rows=1, cols=1, link_length=0, speed_limit_range=[1, 2], rng_seed=0),
        dict(rows=1, cols=1, link_length=10, speed_limit_range=[0, 2], rng_seed=0),
        dict(rows=1, cols=1, link_length=10, speed_limit_range=[3, 2], rng_seed=0),
    ],
)
def test_build_grid_rejects_bad_input(kwargs):
    with pytest.raises(ValidationError):
        build_grid(**kwargs)


def test_link_length_is_euclidean():
    l = Link(id=0, endpoints=((0, 0), (3, 4)), speed_limit=1.0)
    assert l.length == 5.0


def test_adjacency_symmetric_and_complete(cell_net):
    for a, nbrs in cell_net.adjacency.items():
        for b in nbrs:
            assert a in cell_net.adjacency[b]


def test_roundtrip_save_load(tmp_path):
    net = build_grid(2, 2, 100.0, [9.5, 16.67], 0).with_zoi({3, 7})
    path = tmp_path / "net.json"
    save_roadnet(net, path)
    assert load_roadnet(path) == net


def test_load_rejects_unknown_zoi(tmp_path):
    net = build_grid(1, 1, 100.0, [10, 10], 0)
    path = tmp_path / "net.json"
    save_roadnet(net, path)
    doc = json.loads(path.read_text())
    doc["zoi"] = [net.n]
    path.write_text(json.dumps(doc))
    with pytest.raises(NetworkValidationError, match="unknown link in zoi"):
        load_roadnet(path)


def test_load_rejects_asymmetric_adjacency(tmp_path):
    net = build_grid(1, 1, 100.0, [10, 10], 0)
    path = tmp_path / "net.json"
    save_roadnet(net, path)
    doc = json.loads(path.read_text())
    doc["adjacency"] = {str(i): sorted(net.adjacency[i]) for i in range(net.n)}
    doc["adjacency"]["0"] = [1]   # drop reverses elsewhere
    doc["adjacency"]["2"] = []
    path.write_text(json.dumps(doc))
    with pytest.raises(NetworkValidationError, match="adjacency not symmetric"):
        load_roadnet(path)


def test_load_rejects_dangling_adjacency(tmp_path):
    net = build_grid(1, 1, 100.0, [10, 10], 0)
    path = tmp_path / "net.json"
    save_roadnet(net, path)
    doc = json.loads(path.read_text())
    doc["adjacency"] = {"0": [99], "99": [0]}
    path.write_text(json.dumps(doc))
    with pytest.raises(NetworkValidationError, match="dangling adjacency"):
        load_roadnet(path)


def test_load_rejects_disconnected_graph(tmp_path):
    doc = {
        "links": [
            {"id": 0, "x1": 0, "y1": 0, "x2": 1, "y2": 0, "speed_limit": 1},
            {"id": 1, "x1": 5, "y1": 5, "x2": 6, "y2": 5, "speed_limit": 1},
        ],
        "zoi": [],
    }
    path = tmp_path / "net.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(NetworkValidationError, match="not connected"):
        load_roadnet(path)


def test_load_rejects_bad_json(tmp_path):
    path = tmp_path / "net.json"
    path.write_text("{not json")
    with pytest.raises(NetworkFormatError, match="not valid JSON"):
        load_roadnet(path)


def test_load_rejects_malformed_link(tmp_path):
    path = tmp_path / "net.json"
    path.write_text(json.dumps({"links": [{"id": 0, "x1": 0}]}))
    with pytest.raises(NetworkFormatError, match="malformed link"):
        load_roadnet(path)


def test_drop_links_reindexes():
    net = build_grid(3, 5, 100.0, [10, 10], 0)
    assert net.n == 38
    smaller = drop_links(net, [0, 1, 37])
    assert smaller.n == 35
    assert sorted(l.id for l in smaller.links) == list(range(35))
    assert smaller.is_connected()


def test_drop_links_rejects_zoi_member():
    net = build_grid(2, 2, 100.0, [10, 10], 0).with_zoi({5})
    with pytest.raises(ValidationError, match="zoi"):
        drop_links(net, [5])


def test_boundary_links_unit_cell():
    net = build_grid(1, 1, 100.0, [10, 10], 0)
    assert set(net.boundary_links()) == set(range(4))


def test_boundary_links_exclude_fully_interior():
    net = build_grid(4, 4, 100.0, [10, 10], 0)
    boundary = set(net.boundary_links())
    # a horizontal link in the middle row touches no bounding-box point
    mid = [
        l.id for l in net.links
        if all(0 < p[0] < 400 and 0 < p[1] < 400 for p in l.endpoints)
    ]
    assert mid and not (set(mid) & boundary)


def test_roadnet_rejects_non_contiguous_ids():
    links = [
        Link(id=0, endpoints=((0, 0), (1, 0)), speed_limit=1),
        Link(id=2, endpoints=((1, 0), (2, 0)), speed_limit=1),
    ]
    with pytest.raises(NetworkValidationError, match="0..1"):
        RoadNet.from_links(links)
