"""Floating-content dynamics on top of the mobility layer.

Content rules per tick, in fixed order: advance vehicles, erase content on
anchor-zone exit, detect contacts geometrically (distance <= Tx, boundary
inclusive), infrastructure seeding, then single-hop exchange between contact
pairs standing on enabled links. Exchanged content does not relay further
within the same tick.

Contacts and mobility are content-independent, so one mobility trace can be
replayed under many anchor-zone configurations at once; ``replay_content``
does exactly that and is the single production implementation of the content
rules (``run_interval`` is its single-configuration form).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .mobility import (
    TripSchedule,
    VehicleState,
    draw_cruise_speeds,
    spawn_vehicle,
    step,
)
from .roadnet import RoadNet
from .scenario import Scenario


@dataclass(frozen=True)
class AzConfig:
    """Anchor-zone configuration: one bit per link, 1 = replication enabled."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("az bits must be 0 or 1")

    @classmethod
    def all_on(cls, n: int) -> "AzConfig":
        return cls(bits=(1,) * n)

    @classmethod
    def all_off(cls, n: int) -> "AzConfig":
        return cls(bits=(0,) * n)

    @classmethod
    def from_ids(cls, n: int, ids) -> "AzConfig":
        bits = [0] * n
        for i in ids:
            bits[i] = 1
        return cls(bits=tuple(bits))

    @classmethod
    def from_string(cls, s: str) -> "AzConfig":
        if not set(s) <= {"0", "1"}:
            raise ValidationError("az string must contain only 0 and 1")
        return cls(bits=tuple(int(c) for c in s))

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)

    def enabled_ids(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    @property
    def count(self) -> int:
        return sum(self.bits)

    def is_superset_of(self, other: "AzConfig") -> bool:
        return all(a >= b for a, b in zip(self.bits, other.bits))

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class Contact:
    """An active V2V contact between two vehicles."""

    pair: tuple[int, int]        # vehicle ids, ascending
    start_time: float
    duration: float              # seconds present so far, >= dt once observed


@dataclass(frozen=True)
class ContactEnd:
    pair: tuple[int, int]
    duration: float
    links: tuple[int, ...]       # every link an endpoint occupied while active


def detect_contacts(positions, tx: float, previous=(), now: float = 0.0, dt: float = 1.0):
    """All unordered pairs within ``tx`` meters (inclusive).

    ``positions`` maps vehicle id to an (x, y) point. Pairs also present in
    ``previous`` keep their start time and extend their duration by ``dt``.
    """
    if tx <= 0:
        raise ValidationError("tx must be > 0")
    prev = {c.pair: c for c in previous}
    ids = sorted(positions)
    out = []
    if len(ids) >= 2:
        xy = np.array([positions[i] for i in ids])
        diff = xy[:, None, :] - xy[None, :, :]
        d2 = (diff ** 2).sum(axis=2)
        tx2 = tx * tx
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                if d2[a, b] <= tx2:
                    pair = (ids[a], ids[b])
                    if pair in prev:
                        old = prev[pair]
                        out.append(replace(old, duration=old.duration + dt))
                    else:
                        out.append(Contact(pair=pair, start_time=now, duration=dt))
    return out


def seeding_spots(n_links: int, seeding_fraction: float, rng_seed: int):
    """The map's fixed seeding spots: ceil(fraction * N) links drawn uniformly.

    The draw depends only on (seed, fraction, N), never on a configuration,
    so seeder sets are nested under zone inclusion: a larger zone always
    contains at least the smaller zone's active seeders.
    """
    size = math.ceil(seeding_fraction * n_links)
    perm = np.random.default_rng(rng_seed).permutation(n_links)
    return frozenset(int(i) for i in perm[:size])


def choose_seeder_links(az: AzConfig, seeding_fraction: float, rng_seed: int):
    """Active seeder links: seeding spots that fall inside the enabled zone.

    With everything enabled this is exactly ceil(fraction * N) links; an
    all-OFF configuration yields no seeders (seeding is a no-op).
    """
    if not (0 < seeding_fraction <= 1):
        raise ValidationError("seeding_fraction must be in (0, 1]")
    spots = seeding_spots(len(az), seeding_fraction, rng_seed)
    return tuple(sorted(spots & set(az.enabled_ids())))


def apply_seeding(vehicles, pending):
    """Give content to the lowest-id content-less vehicle on each pending link.

    Returns the updated vehicle list and the set of links that seeded.
    """
    seeded = set()
    out = list(vehicles)
    for l in sorted(pending):
        best = None
        for idx, v in enumerate(out):
            if v.link == l and not v.has_content:
                if best is None or v.id < out[best].id:
                    best = idx
        if best is not None:
            out[best] = replace(out[best], has_content=True)
            seeded.add(l)
    return out, seeded


def seed(vehicles, az: AzConfig, seeding_fraction: float, rng_seed: int):
    """One-tick seeding pass over a fresh interval (all seeder links pending)."""
    pending = set(choose_seeder_links(az, seeding_fraction, rng_seed))
    out, _ = apply_seeding(vehicles, pending)
    return out


def exchange(vehicles, az: AzConfig, contacts):
    """Single-hop replication across contact pairs.

    Where exactly one side carries the content, the other acquires it iff
    both vehicles stand on enabled links. Transfers read the tick-start
    state, so content never relays beyond direct pairs within one tick.
    """
    by_id = {v.id: v for v in vehicles}
    had = {v.id: v.has_content for v in vehicles}
    gains = set()
    for c in contacts:
        a, b = c.pair
        if a not in by_id or b not in by_id:
            continue
        if not (az.bits[by_id[a].link] and az.bits[by_id[b].link]):
            continue
        if had[a] and not had[b]:
            gains.add(b)
        elif had[b] and not had[a]:
            gains.add(a)
    return [replace(v, has_content=True) if v.id in gains else v for v in vehicles]


def erase_on_exit(vehicles, az: AzConfig):
    """Carriers standing on disabled links lose the content."""
    return [
        replace(v, has_content=False)
        if v.has_content and not az.bits[v.link]
        else v
        for v in vehicles
    ]


# --------------------------------------------------------------------------
# Mobility trace: content-independent positions, speeds, and contacts.


@dataclass
class MobilityTrace:
    net: RoadNet
    dt: float
    tx: float
    n_ticks: int
    n_vehicle_ids: int
    ids: list                   # per tick: (V,) int32, ascending
    link: list                  # per tick: (V,) int32
    speed: list                 # per tick: (V,) float
    contact_pairs: list         # per tick: (C, 2) int32 vehicle ids
    contact_starts: list        # per tick: (C,) int start tick (1-based)
    ended: list                 # per tick: list[ContactEnd]
    arrivals: list
    departures: list
    states: list | None = None  # per tick: list[VehicleState], when recorded


def simulate_mobility(
    net: RoadNet,
    schedule: TripSchedule,
    scenario: Scenario,
    rng_seed: int | None = None,
    n_ticks: int | None = None,
    record_states: bool = False,
) -> MobilityTrace:
    """Run the interval's mobility once; content is layered on afterwards."""
    if rng_seed is None:
        rng_seed = scenario.rng_seed
    if n_ticks is None:
        n_ticks = scenario.n_ticks
    dt, tx = scenario.dt, scenario.tx
    cruise = draw_cruise_speeds(scenario, len(schedule), rng_seed)

    vehicles: list[VehicleState] = []
    trip_idx = 0
    active: dict[tuple[int, int], int] = {}       # pair -> start tick
    touched: dict[tuple[int, int], set] = {}      # pair -> links visited while active

    trace = MobilityTrace(
        net=net, dt=dt, tx=tx, n_ticks=n_ticks,
        n_vehicle_ids=len(schedule),
        ids=[], link=[], speed=[], contact_pairs=[], contact_starts=[],
        ended=[], arrivals=[], departures=[],
        states=[] if record_states else None,
    )
    tx2 = tx * tx

    for k in range(1, n_ticks + 1):
        t = k * dt
        before = len(vehicles)
        vehicles = step(vehicles, net, dt)
        departed = before - len(vehicles)

        arrived = 0
        while trip_idx < len(schedule) and schedule.trips[trip_idx].entry_time <= t:
            vehicles.append(
                spawn_vehicle(net, trip_idx, schedule.trips[trip_idx], float(cruise[trip_idx]))
            )
            trip_idx += 1
            arrived += 1

        ids = np.array([v.id for v in vehicles], dtype=np.int32)
        links = np.array([v.link for v in vehicles], dtype=np.int32)
        speeds = np.array([v.speed for v in vehicles], dtype=float)

        pairs = []
        if len(vehicles) >= 2:
            xy = np.array([v.position(net) for v in vehicles])
            diff = xy[:, None, :] - xy[None, :, :]
            d2 = (diff ** 2).sum(axis=2)
            ii, jj = np.nonzero(np.triu(d2 <= tx2, k=1))
            pairs = [(int(ids[a]), int(ids[b])) for a, b in zip(ii, jj)]

        ended_events = []
        current = set(pairs)
        for pair, start in list(active.items()):
            if pair not in current:
                dur = (k - start) * dt
                ended_events.append(
                    ContactEnd(pair=pair, duration=dur,
                               links=tuple(sorted(touched.pop(pair))))
                )
                del active[pair]
        link_by_id = {int(i): int(l) for i, l in zip(ids, links)}
        starts = []
        for pair in pairs:
            if pair not in active:
                active[pair] = k
                touched[pair] = set()
            touched[pair].update((link_by_id[pair[0]], link_by_id[pair[1]]))
            starts.append(active[pair])

        trace.ids.append(ids)
        trace.link.append(links)
        trace.speed.append(speeds)
        trace.contact_pairs.append(
            np.array(pairs, dtype=np.int32).reshape(-1, 2)
        )
        trace.contact_starts.append(np.array(starts, dtype=np.int64))
        trace.ended.append(ended_events)
        trace.arrivals.append(arrived)
        trace.departures.append(departed)
        if record_states:
            trace.states.append([replace(v) for v in vehicles])

    # Contacts still open at interval close count with their duration so far.
    for pair, start in sorted(active.items()):
        dur = (n_ticks - start + 1) * dt
        trace.ended[-1].append(
            ContactEnd(pair=pair, duration=dur,
                       links=tuple(sorted(touched[pair])))
        )
    return trace


# --------------------------------------------------------------------------
# Batched content replay over one mobility trace.


@dataclass
class ReplayResult:
    az: np.ndarray               # (M, N) bool
    vc_sum: np.ndarray           # (M, N) float: summed carrier counts per link
    seeder_links: list           # per config: tuple of seeder link ids
    carriers_by_tick: list | None  # per tick: (V, M) bool, when recorded


def replay_content(
    mob: MobilityTrace,
    az_matrix,
    seeding_fractions,
    rng_seed: int,
    record_carriers: bool = False,
) -> ReplayResult:
    """Replay the content rules for M configurations over one mobility trace.

    Valid because contacts and motion are content-independent; every column
    reproduces exactly what a standalone run of that configuration would do.
    """
    az = np.asarray(az_matrix, dtype=bool)
    if az.ndim == 1:
        az = az[None, :]
    m, n = az.shape
    if n != mob.net.n:
        raise ValidationError("az width does not match the network")
    fractions = np.broadcast_to(np.asarray(seeding_fractions, dtype=float), (m,))

    if np.any((fractions <= 0) | (fractions > 1)):
        raise ValidationError("seeding_fraction must be in (0, 1]")
    seeders = []
    pending = np.zeros((m, n), dtype=bool)
    spot_cache: dict[float, frozenset] = {}
    for i in range(m):
        f = float(fractions[i])
        if f not in spot_cache:
            spot_cache[f] = seeding_spots(n, f, rng_seed)
        chosen = tuple(sorted(spot_cache[f] & set(np.flatnonzero(az[i]).tolist())))
        seeders.append(chosen)
        for l in chosen:
            pending[i, l] = True

    az_t = az.T.copy()                      # (N, M) row gather by link id
    carriers = np.zeros((mob.n_vehicle_ids, m), dtype=bool)
    vc_sum = np.zeros((n, m), dtype=float)
    by_tick = [] if record_carriers else None

    for k in range(mob.n_ticks):
        ids = mob.ids[k]
        links = mob.link[k]
        if ids.size:
            # erase on exit
            carriers[ids] &= az_t[links]

            # infrastructure seeding: first content-less vehicle per pending link
            if pending.any():
                for l in np.unique(links):
                    col = pending[:, l]
                    if not col.any():
                        continue
                    for v in ids[links == l]:
                        can = col & ~carriers[v]
                        if can.any():
                            carriers[v] |= can
                            col &= ~can
                        if not col.any():
                            break
                    pending[:, l] = col

        pairs = mob.contact_pairs[k]
        if pairs.size:
            lmap = np.zeros(mob.n_vehicle_ids, dtype=np.int32)
            lmap[ids] = links
            ok = az_t[lmap[pairs[:, 0]]] & az_t[lmap[pairs[:, 1]]]   # (C, M)
            snap = carriers[pairs]                                    # (C, 2, M) copy
            for c in range(pairs.shape[0]):
                a, b = pairs[c]
                carriers[b] |= snap[c, 0] & ok[c]
                carriers[a] |= snap[c, 1] & ok[c]

        if ids.size:
            sub = carriers[ids]
            for l in np.unique(links):
                vc_sum[l] += sub[links == l].sum(axis=0)
            if record_carriers:
                by_tick.append(sub)
        elif record_carriers:
            by_tick.append(carriers[ids].copy())

    return ReplayResult(az=az, vc_sum=vc_sum.T, seeder_links=seeders,
                        carriers_by_tick=by_tick)


# --------------------------------------------------------------------------
# Single-configuration interval run.


@dataclass
class TickRecord:
    t: float
    vehicles: list               # VehicleState snapshots, content applied
    contacts: list               # active Contact records
    ended_contacts: list         # ContactEnd records (incl. interval close)
    arrivals: int
    departures: int


@dataclass
class SimTrace:
    net: RoadNet
    az: AzConfig
    dt: float
    tx: float
    ticks: list

    @property
    def n_ticks(self) -> int:
        return len(self.ticks)


def run_interval(
    net: RoadNet,
    az: AzConfig,
    schedule: TripSchedule,
    scenario: Scenario,
    rng_seed: int | None = None,
) -> SimTrace:
    """Simulate one interval under one configuration; deterministic per seed."""
    if len(az) != net.n:
        raise ValidationError(f"az has {len(az)} bits, network has {net.n} links")
    if rng_seed is None:
        rng_seed = scenario.rng_seed
    mob = simulate_mobility(net, schedule, scenario, rng_seed=rng_seed,
                            record_states=True)
    rep = replay_content(mob, az.as_array(), [scenario.seeding_fraction],
                         rng_seed, record_carriers=True)

    ticks = []
    for k in range(mob.n_ticks):
        ids = mob.ids[k]
        carrier = dict(zip(ids.tolist(), rep.carriers_by_tick[k][:, 0].tolist()))
        vehicles = [
            replace(v, has_content=bool(carrier[v.id])) for v in mob.states[k]
        ]
        contacts = [
            Contact(
                pair=(int(p[0]), int(p[1])),
                start_time=float(s * mob.dt),
                duration=float((k + 1 - s + 1) * mob.dt),
            )
            for p, s in zip(mob.contact_pairs[k], mob.contact_starts[k])
        ]
        ticks.append(
            TickRecord(
                t=(k + 1) * mob.dt,
                vehicles=vehicles,
                contacts=contacts,
                ended_contacts=list(mob.ended[k]),
                arrivals=mob.arrivals[k],
                departures=mob.departures[k],
            )
        )
    return SimTrace(net=net, az=az, dt=mob.dt, tx=mob.tx, ticks=ticks)


def write_trace(trace: SimTrace, path) -> None:
    """Debug export: one line per (tick, vehicle)."""
    with open(path, "w") as fh:
        fh.write("tick,vehicle_id,link,offset,has_content\n")
        for k, rec in enumerate(trace.ticks):
            for v in rec.vehicles:
                fh.write(f"{k},{v.id},{v.link},{v.offset:.9g},{int(v.has_content)}\n")
