"""Road network model: links, derived connectivity, and the zone of interest.

A network is a set of undirected road links embedded in the plane. Two links
are adjacent when they share an endpoint (coordinates equal within
``COORD_TOL`` meters); vehicles may traverse a link in either direction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NetworkFormatError, NetworkValidationError, ValidationError

# Endpoints closer than this are the same intersection.
COORD_TOL = 1e-6

Point = tuple[float, float]


def _node_key(p: Point) -> tuple[int, int]:
    return (round(p[0] / COORD_TOL), round(p[1] / COORD_TOL))


@dataclass(frozen=True)
class Link:
    """A single road link between two intersections.

    ``length`` is always the Euclidean distance between the endpoints.
    """

    id: int
    endpoints: tuple[Point, Point]
    speed_limit: float

    def __post_init__(self):
        if self.speed_limit <= 0:
            raise ValidationError(f"link {self.id}: speed_limit must be > 0")
        if self.length <= 0:
            raise ValidationError(f"link {self.id}: endpoints coincide")

    @property
    def length(self) -> float:
        (x1, y1), (x2, y2) = self.endpoints
        return math.hypot(x2 - x1, y2 - y1)

    def point_at(self, offset: float, direction: int) -> Point:
        """Planar position at ``offset`` meters along the travel direction."""
        (x1, y1), (x2, y2) = self.endpoints
        frac = offset / self.length
        if direction < 0:
            frac = 1.0 - frac
        return (x1 + (x2 - x1) * frac, y1 + (y2 - y1) * frac)


@dataclass(frozen=True)
class RoadNet:
    """Immutable road network. Safe to share across concurrent runs."""

    links: tuple[Link, ...]
    adjacency: dict[int, frozenset[int]]
    zoi: frozenset[int]
    _node_of_link: dict[int, tuple[tuple[int, int], tuple[int, int]]] = field(
        repr=False, compare=False, default_factory=dict
    )

    @classmethod
    def from_links(cls, links, zoi=()) -> "RoadNet":
        links = tuple(links)
        n = len(links)
        if n == 0:
            raise NetworkValidationError("network has no links")
        if sorted(l.id for l in links) != list(range(n)):
            raise NetworkValidationError(f"link ids must be exactly 0..{n - 1}")
        links = tuple(sorted(links, key=lambda l: l.id))

        node_links: dict[tuple[int, int], set[int]] = {}
        node_of_link = {}
        for link in links:
            keys = (_node_key(link.endpoints[0]), _node_key(link.endpoints[1]))
            node_of_link[link.id] = keys
            for k in keys:
                node_links.setdefault(k, set()).add(link.id)

        adjacency = {
            link.id: frozenset(
                other
                for k in node_of_link[link.id]
                for other in node_links[k]
                if other != link.id
            )
            for link in links
        }

        zoi = frozenset(int(z) for z in zoi)
        unknown = zoi - set(range(n))
        if unknown:
            raise NetworkValidationError(f"unknown link in zoi: {sorted(unknown)}")

        net = cls(links=links, adjacency=adjacency, zoi=zoi, _node_of_link=node_of_link)
        if not net.is_connected():
            raise NetworkValidationError("graph not connected")
        return net

    @property
    def n(self) -> int:
        return len(self.links)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            cur = stack.pop()
            for nxt in self.adjacency[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == self.n

    def nodes_of(self, link_id: int) -> tuple[tuple[int, int], tuple[int, int]]:
        return self._node_of_link[link_id]

    def shared_node(self, a: int, b: int):
        """Intersection key shared by two adjacent links, or None."""
        na, nb = self._node_of_link[a], self._node_of_link[b]
        for k in na:
            if k in nb:
                return k
        return None

    def link_lengths(self) -> np.ndarray:
        return np.array([l.length for l in self.links])

    def boundary_links(self) -> tuple[int, ...]:
        """Links touching the bounding box of the network (entry/exit points)."""
        xs = [p[0] for l in self.links for p in l.endpoints]
        ys = [p[1] for l in self.links for p in l.endpoints]
        lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)

        def on_box(p: Point) -> bool:
            return (
                abs(p[0] - lo_x) <= COORD_TOL
                or abs(p[0] - hi_x) <= COORD_TOL
                or abs(p[1] - lo_y) <= COORD_TOL
                or abs(p[1] - hi_y) <= COORD_TOL
            )

        return tuple(l.id for l in self.links if any(on_box(p) for p in l.endpoints))

    def with_zoi(self, zoi) -> "RoadNet":
        return RoadNet.from_links(self.links, zoi=zoi)


def build_grid(
    rows: int,
    cols: int,
    link_length: float,
    speed_limit_range,
    rng_seed: int,
    zoi=(),
) -> RoadNet:
    """Build a Manhattan grid of ``rows`` x ``cols`` cells.

    Horizontal links come first (row-major), then vertical links; per-link
    speed limits are drawn uniformly from ``speed_limit_range``. Deterministic
    for a fixed seed.
    """
    lo, hi = float(speed_limit_range[0]), float(speed_limit_range[1])
    if rows < 1 or cols < 1:
        raise ValidationError("rows and cols must be >= 1")
    if link_length <= 0:
        raise ValidationError("link_length must be > 0")
    if not (0 < lo <= hi):
        raise ValidationError("speed_limit_range must satisfy 0 < min <= max")

    segments = []
    for i in range(rows + 1):
        for j in range(cols):
            segments.append(((j * link_length, i * link_length),
                             ((j + 1) * link_length, i * link_length)))
    for i in range(rows):
        for j in range(cols + 1):
            segments.append(((j * link_length, i * link_length),
                             (j * link_length, (i + 1) * link_length)))

    rng = np.random.default_rng(rng_seed)
    speeds = rng.uniform(lo, hi, size=len(segments))
    links = [
        Link(id=i, endpoints=seg, speed_limit=float(s))
        for i, (seg, s) in enumerate(zip(segments, speeds))
    ]
    return RoadNet.from_links(links, zoi=zoi)


def drop_links(net: RoadNet, ids) -> RoadNet:
    """Remove links by id and re-index the survivors to 0..N-1.

    Order of the surviving links is preserved; the result must stay connected.
    """
    ids = set(int(i) for i in ids)
    unknown = ids - set(range(net.n))
    if unknown:
        raise ValidationError(f"cannot drop unknown links: {sorted(unknown)}")
    if net.zoi & ids:
        raise ValidationError("cannot drop links inside the zoi")
    kept = [l for l in net.links if l.id not in ids]
    remap = {old.id: new_id for new_id, old in enumerate(kept)}
    links = [
        Link(id=remap[l.id], endpoints=l.endpoints, speed_limit=l.speed_limit)
        for l in kept
    ]
    zoi = frozenset(remap[z] for z in net.zoi)
    return RoadNet.from_links(links, zoi=zoi)


def save_roadnet(net: RoadNet, path) -> None:
    doc = {
        "links": [
            {
                "id": l.id,
                "x1": l.endpoints[0][0],
                "y1": l.endpoints[0][1],
                "x2": l.endpoints[1][0],
                "y2": l.endpoints[1][1],
                "speed_limit": l.speed_limit,
            }
            for l in net.links
        ],
        "zoi": sorted(net.zoi),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_roadnet(path) -> RoadNet:
    """Load and validate a network file.

    Adjacency is derived from shared endpoints; an explicit ``adjacency``
    block, when present, is validated against the derived one.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"network file is not valid JSON: {exc}") from exc

    if not isinstance(doc, dict) or "links" not in doc:
        raise NetworkFormatError("network file must be an object with a 'links' array")
    try:
        links = [
            Link(
                id=int(rec["id"]),
                endpoints=(
                    (float(rec["x1"]), float(rec["y1"])),
                    (float(rec["x2"]), float(rec["y2"])),
                ),
                speed_limit=float(rec["speed_limit"]),
            )
            for rec in doc["links"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise NetworkFormatError(f"malformed link record: {exc}") from exc

    net = RoadNet.from_links(links, zoi=doc.get("zoi", ()))

    if "adjacency" in doc:
        declared = doc["adjacency"]
        try:
            declared = {int(k): set(int(v) for v in vs) for k, vs in declared.items()}
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"malformed adjacency block: {exc}") from exc
        known = set(range(net.n))
        refs = set(declared) | {v for vs in declared.values() for v in vs}
        if refs - known:
            raise NetworkValidationError(
                f"dangling adjacency: unknown links {sorted(refs - known)}"
            )
        for a, vs in declared.items():
            for b in vs:
                if a not in declared.get(b, ()):
                    raise NetworkValidationError(
                        f"adjacency not symmetric: {a} -> {b} has no reverse"
                    )
        derived = {k: set(v) for k, v in net.adjacency.items()}
        if {k: set(v) for k, v in declared.items()} != derived:
            raise NetworkValidationError("adjacency does not match link geometry")

    return net
