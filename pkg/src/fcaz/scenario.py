"""Scenario files: traffic, radio, and timing parameters for one experiment.

A scenario is a JSON object. The network is either referenced by path
(``"network": {"path": ...}``) or generated in place
(``"network": {"grid": {...}}``). Grid networks may drop boundary links to
reach a target street count; surviving links are re-indexed to 0..N-1 and
``zoi`` refers to the re-indexed ids.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

from .errors import DataSchemaError, ValidationError
from .roadnet import RoadNet, build_grid, drop_links, load_roadnet


@dataclass(frozen=True)
class Scenario:
    arrival_rate: float                 # vehicles per second entering the map
    duration: float                     # seconds of simulated traffic
    dt: float = 1.0                     # sampling time, one clock for motion and stats
    interval: float = 3600.0            # aggregation interval (seconds)
    tx: float = 100.0                   # transmission radius (meters)
    seeding_fraction: float = 0.05      # fraction of enabled links that seed
    cruise_speed: tuple[float, float] = (16.67, 16.67)  # per-vehicle cruise draw (m/s)
    rng_seed: int = 0
    s_des: float = 0.9                  # availability target in the zoi
    k_weight: float = 1.0              # relative weight of the application cost
    network: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arrival_rate <= 0:
            raise ValidationError("arrival_rate must be > 0")
        if self.duration <= 0 or self.dt <= 0 or self.interval <= 0:
            raise ValidationError("duration, dt and interval must be > 0")
        if self.tx <= 0:
            raise ValidationError("tx must be > 0")
        if not (0 < self.seeding_fraction <= 1):
            raise ValidationError("seeding_fraction must be in (0, 1]")
        lo, hi = self.cruise_speed
        if not (0 < lo <= hi):
            raise ValidationError("cruise_speed must satisfy 0 < min <= max")
        if not (0 <= self.s_des <= 1):
            raise ValidationError("s_des must be in [0, 1]")
        if self.k_weight < 0:
            raise ValidationError("k_weight must be >= 0")

    @property
    def n_ticks(self) -> int:
        return int(round(self.interval / self.dt))

    @property
    def n_intervals(self) -> int:
        return int(self.duration // self.interval)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["cruise_speed"] = list(self.cruise_speed)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        doc = dict(doc)
        if "cruise_speed" in doc:
            doc["cruise_speed"] = tuple(doc["cruise_speed"])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise DataSchemaError(f"bad scenario field: {exc}") from exc

    def replace(self, **kw) -> "Scenario":
        doc = self.to_dict()
        doc.update(kw)
        return Scenario.from_dict(doc)


def scenario_hash(scenario: Scenario) -> str:
    canon = json.dumps(scenario.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def build_network(scenario: Scenario, base_dir: str = ".") -> RoadNet:
    spec = scenario.network
    if "path" in spec:
        path = spec["path"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return load_roadnet(path)
    if "grid" in spec:
        g = spec["grid"]
        try:
            net = build_grid(
                rows=int(g["rows"]),
                cols=int(g["cols"]),
                link_length=float(g.get("link_length", 100.0)),
                speed_limit_range=g.get("speed_limit", [16.67, 16.67]),
                rng_seed=int(g.get("seed", 0)),
            )
        except KeyError as exc:
            raise DataSchemaError(f"grid spec missing field {exc}") from exc
        if g.get("drop_links"):
            net = drop_links(net, g["drop_links"])
        return net.with_zoi(g.get("zoi", ()))
    raise DataSchemaError("scenario network must provide 'path' or 'grid'")


def load_scenario(path) -> tuple[Scenario, RoadNet]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataSchemaError(f"scenario file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataSchemaError("scenario file must be a JSON object")
    scenario = Scenario.from_dict(doc)
    net = build_network(scenario, base_dir=os.path.dirname(os.path.abspath(path)))
    return scenario, net


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
