"""Vehicle trips and discrete-time motion along the road network.

Vehicles enter at a boundary link, follow a shortest-length link path to
another boundary link, and are removed on completing it. Motion advances
``speed * dt`` meters per tick, carrying the remainder across link
boundaries; the per-link speed is ``min(speed_limit, cruise_speed)`` where
the cruise speed is drawn once at spawn.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .roadnet import RoadNet
from .scenario import Scenario


@dataclass(frozen=True)
class Trip:
    entry_time: float
    origin: int
    destination: int


@dataclass(frozen=True)
class TripSchedule:
    trips: tuple[Trip, ...]

    def __post_init__(self):
        times = [t.entry_time for t in self.trips]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("trip entry times must be non-decreasing")
        if any(t.origin == t.destination for t in self.trips):
            raise ValidationError("trip origin must differ from destination")

    def __len__(self) -> int:
        return len(self.trips)


@dataclass
class VehicleState:
    id: int
    link: int
    offset: float           # meters along the travel direction, in [0, length]
    direction: int           # +1: endpoints[0] -> endpoints[1], -1 reversed
    speed: float             # current speed on this link (m/s)
    cruise_speed: float
    route: tuple[int, ...]   # remaining links, current first
    has_content: bool = False

    def position(self, net: RoadNet):
        return net.links[self.link].point_at(self.offset, self.direction)


def route(net: RoadNet, origin: int, destination: int) -> list[int]:
    """Minimum-total-length link path, inclusive of both ends.

    Ties between equal-length paths are broken toward the lexicographically
    smallest link-id sequence.
    """
    for lid in (origin, destination):
        if not 0 <= lid < net.n:
            raise ValidationError(f"unknown link {lid}")
    if origin == destination:
        return [origin]

    lengths = net.link_lengths()
    # Heap ordered by (total length, path); the path component resolves ties
    # toward the lexicographically smallest link sequence.
    heap = [(float(lengths[origin]), (origin,))]
    settled: set[int] = set()
    while heap:
        dist, path = heapq.heappop(heap)
        cur = path[-1]
        if cur in settled:
            continue
        settled.add(cur)
        if cur == destination:
            return list(path)
        for nxt in sorted(net.adjacency[cur]):
            if nxt not in settled:
                heapq.heappush(heap, (dist + float(lengths[nxt]), path + (nxt,)))
    raise ValidationError(f"no route from {origin} to {destination}")


def spawn_trips(
    net: RoadNet, arrival_rate: float, duration: float, rng_seed: int
) -> TripSchedule:
    """Poisson arrivals with origin/destination uniform over boundary links."""
    if arrival_rate <= 0:
        raise ValidationError("arrival_rate must be > 0")
    if duration <= 0:
        raise ValidationError("duration must be > 0")
    boundary = net.boundary_links()
    if len(boundary) < 2:
        raise ValidationError("need at least two boundary links to spawn trips")

    rng = np.random.default_rng(rng_seed)
    trips = []
    t = rng.exponential(1.0 / arrival_rate)
    while t < duration:
        origin = int(rng.choice(boundary))
        dest = origin
        while dest == origin:
            dest = int(rng.choice(boundary))
        trips.append(Trip(entry_time=float(t), origin=origin, destination=dest))
        t += rng.exponential(1.0 / arrival_rate)
    return TripSchedule(trips=tuple(trips))


def _entry_direction(net: RoadNet, link: int, entry_node) -> int:
    return 1 if net.nodes_of(link)[0] == entry_node else -1


def spawn_vehicle(
    net: RoadNet, vehicle_id: int, trip: Trip, cruise_speed: float
) -> VehicleState:
    """Place a fresh vehicle at the start of its route."""
    path = route(net, trip.origin, trip.destination)
    nodes = net.nodes_of(trip.origin)
    if len(path) > 1:
        shared = net.shared_node(path[0], path[1])
        entry = nodes[1] if nodes[0] == shared else nodes[0]
    else:
        entry = nodes[0]
    direction = _entry_direction(net, trip.origin, entry)
    speed = min(net.links[trip.origin].speed_limit, cruise_speed)
    return VehicleState(
        id=vehicle_id,
        link=trip.origin,
        offset=0.0,
        direction=direction,
        speed=speed,
        cruise_speed=cruise_speed,
        route=tuple(path),
    )


def step(vehicles, net: RoadNet, dt: float):
    """Advance every vehicle ``speed * dt`` meters along its route.

    Distance left over at a link boundary carries onto the next link; the
    speed is re-drawn per link as min(speed_limit, cruise) and takes effect
    on the following tick. Vehicles completing their route are removed.
    Content ownership is untouched.
    """
    if dt <= 0:
        raise ValidationError("dt must be > 0")
    out = []
    for v in vehicles:
        budget = v.speed * dt
        link, offset, direction, speed = v.link, v.offset, v.direction, v.speed
        rt = v.route
        departed = False
        while True:
            remaining = net.links[link].length - offset
            if budget < remaining:
                offset += budget
                break
            budget -= remaining
            if len(rt) == 1:
                departed = True
                break
            prev = link
            rt = rt[1:]
            link = rt[0]
            entry = net.shared_node(prev, link)
            direction = _entry_direction(net, link, entry)
            offset = 0.0
            speed = min(net.links[link].speed_limit, v.cruise_speed)
        if not departed:
            out.append(
                replace(
                    v, link=link, offset=offset, direction=direction,
                    speed=speed, route=rt,
                )
            )
    return out


def slice_schedule(schedule: TripSchedule, start: float, end: float) -> TripSchedule:
    """Trips entering in [start, end), re-based so the slice starts at 0."""
    trips = tuple(
        Trip(entry_time=t.entry_time - start, origin=t.origin, destination=t.destination)
        for t in schedule.trips
        if start <= t.entry_time < end
    )
    return TripSchedule(trips=trips)


def interval_schedule(net: RoadNet, scenario: Scenario, interval_index: int) -> TripSchedule:
    """Independent Poisson schedule for one aggregation interval.

    Interval runs start from an empty network; each interval draws its own
    arrivals, seeded by (scenario seed, interval index).
    """
    seed = np.random.SeedSequence((scenario.rng_seed, interval_index))
    gen_seed = int(seed.generate_state(1)[0])
    return spawn_trips(net, scenario.arrival_rate, scenario.interval, gen_seed)


def draw_cruise_speeds(scenario: Scenario, n: int, rng_seed: int) -> np.ndarray:
    lo, hi = scenario.cruise_speed
    rng = np.random.default_rng(np.random.SeedSequence((rng_seed, 0x5EED)))
    return rng.uniform(lo, hi, size=n)
