"""Per-link feature sampling, interval aggregation, and dataset files.

Each link carries six observables: carrier count, non-carrier count, vehicles
in contact, mean contact duration, mean speed, and the transmission radius.
They split into mobility features (knowable a priori, independent of the
anchor zone) and communication features (observable only after running a
configuration).
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .engine import AzConfig, MobilityTrace, ReplayResult, SimTrace
from .errors import DataSchemaError, ValidationError
from .roadnet import RoadNet

MOB_FEATURES = ("n_vehicles", "nu", "lambda", "t_lambda", "tx")
CSV_HEADER = (
    "triple_id,link_id,n_vehicles,nu,lambda,t_lambda,tx,v_c,availability,label_bit"
)


@dataclass(frozen=True)
class MobilityFeatures:
    """Anchor-zone-independent per-link features (arrays of length N)."""

    n_vehicles: np.ndarray    # mean vehicles present (V_c + V_nc)
    nu: np.ndarray            # mean speed, weighted by vehicle-ticks
    lam: np.ndarray           # mean vehicles with >= 1 active contact
    t_lam: np.ndarray         # mean duration of contacts observed on the link
    tx: np.ndarray            # transmission radius

    @property
    def n(self) -> int:
        return len(self.n_vehicles)

    def matrix(self) -> np.ndarray:
        """(N, 5) feature block, column order per MOB_FEATURES."""
        return np.column_stack([self.n_vehicles, self.nu, self.lam, self.t_lam, self.tx])


@dataclass(frozen=True)
class CommFeatures:
    """Configuration-dependent per-link features (arrays of length N)."""

    v_c: np.ndarray
    availability: np.ndarray

    @property
    def n(self) -> int:
        return len(self.v_c)


@dataclass(frozen=True)
class LinkFeatures:
    """Full per-link feature table, combining both halves."""

    v_c: np.ndarray
    v_nc: np.ndarray
    lam: np.ndarray
    t_lam: np.ndarray
    nu: np.ndarray
    tx: np.ndarray

    def __post_init__(self):
        for name in ("v_c", "v_nc", "lam", "t_lam", "nu", "tx"):
            if np.any(getattr(self, name) < 0):
                raise ValidationError(f"feature {name} must be >= 0")
        if np.any((self.t_lam == 0) & (self.lam > 0)):
            raise ValidationError("t_lambda may be 0 only where lambda is 0")

    @property
    def total(self) -> np.ndarray:
        return self.v_c + self.v_nc

    @property
    def n(self) -> int:
        return len(self.v_c)


def combine(p_mob: MobilityFeatures, p_com: CommFeatures) -> LinkFeatures:
    if p_mob.n != p_com.n:
        raise ValidationError("feature halves have different link dimension")
    return LinkFeatures(
        v_c=p_com.v_c,
        v_nc=p_mob.n_vehicles - p_com.v_c,
        lam=p_mob.lam,
        t_lam=p_mob.t_lam,
        nu=p_mob.nu,
        tx=p_mob.tx,
    )


@dataclass(frozen=True)
class DatasetTriple:
    p_mob: MobilityFeatures
    p_com: CommFeatures
    label: AzConfig

    @property
    def n(self) -> int:
        return self.p_mob.n


def make_triple(p_mob: MobilityFeatures, p_com: CommFeatures, az: AzConfig) -> DatasetTriple:
    """Assemble one dataset record; label corrections happen downstream."""
    if not (p_mob.n == p_com.n == len(az)):
        raise ValidationError("triple parts have inconsistent link dimension")
    return DatasetTriple(p_mob=p_mob, p_com=p_com, label=az)


# --------------------------------------------------------------------------
# Per-tick sampling and interval aggregation.


@dataclass(frozen=True)
class Frame:
    """Instantaneous per-link statistics for one tick."""

    n_vehicles: np.ndarray
    n_carriers: np.ndarray
    n_in_contact: np.ndarray
    speed_sum: np.ndarray
    contact_end_durations: tuple   # ((link_id, duration), ...)


def sample_frame(tick, net: RoadNet) -> Frame:
    """Sample one SimTrace tick into per-link counts.

    A contact increments the in-contact count of the link each endpoint
    vehicle stands on; durations of contacts ending at this tick are
    attributed to every link the contact was observed on.
    """
    n = net.n
    counts = np.zeros(n)
    carriers = np.zeros(n)
    in_contact = np.zeros(n)
    speed_sum = np.zeros(n)

    link_of = {}
    for v in tick.vehicles:
        counts[v.link] += 1
        speed_sum[v.link] += v.speed
        if v.has_content:
            carriers[v.link] += 1
        link_of[v.id] = v.link

    contacted = {i for c in tick.contacts for i in c.pair}
    for vid in contacted:
        in_contact[link_of[vid]] += 1

    ends = tuple(
        (l, e.duration) for e in tick.ended_contacts for l in e.links
    )
    return Frame(
        n_vehicles=counts,
        n_carriers=carriers,
        n_in_contact=in_contact,
        speed_sum=speed_sum,
        contact_end_durations=ends,
    )


def aggregate(frames, tx: float) -> tuple[MobilityFeatures, CommFeatures]:
    """Arithmetic means of the frames of one interval."""
    frames = list(frames)
    if not frames:
        raise ValidationError("aggregate needs at least one frame")
    n = len(frames[0].n_vehicles)
    t = len(frames)

    count_sum = np.zeros(n)
    carrier_sum = np.zeros(n)
    contact_sum = np.zeros(n)
    speed_sum = np.zeros(n)
    dur_sum = np.zeros(n)
    dur_cnt = np.zeros(n)
    for f in frames:
        count_sum += f.n_vehicles
        carrier_sum += f.n_carriers
        contact_sum += f.n_in_contact
        speed_sum += f.speed_sum
        for link, dur in f.contact_end_durations:
            dur_sum[link] += dur
            dur_cnt[link] += 1

    total = count_sum / t
    v_c = carrier_sum / t
    lam = contact_sum / t
    with np.errstate(invalid="ignore", divide="ignore"):
        nu = np.where(count_sum > 0, speed_sum / count_sum, 0.0)
        t_lam = np.where(dur_cnt > 0, dur_sum / dur_cnt, 0.0)
        availability = np.where(total > 0, v_c / total, 0.0)

    p_mob = MobilityFeatures(
        n_vehicles=total, nu=nu, lam=lam, t_lam=t_lam, tx=np.full(n, float(tx))
    )
    p_com = CommFeatures(v_c=v_c, availability=availability)
    return p_mob, p_com


def features_from_trace(trace: SimTrace) -> tuple[MobilityFeatures, CommFeatures]:
    frames = [sample_frame(tick, trace.net) for tick in trace.ticks]
    return aggregate(frames, trace.tx)


def mobility_features(mob: MobilityTrace) -> MobilityFeatures:
    """Mobility half straight from a mobility trace (batch path).

    Accumulates per tick first, matching ``aggregate`` bit for bit.
    """
    n = mob.net.n
    t = mob.n_ticks
    count_sum = np.zeros(n)
    contact_sum = np.zeros(n)
    speed_sum = np.zeros(n)
    dur_sum = np.zeros(n)
    dur_cnt = np.zeros(n)

    for k in range(t):
        ids, links, speeds = mob.ids[k], mob.link[k], mob.speed[k]
        tick_count = np.zeros(n)
        tick_speed = np.zeros(n)
        tick_contact = np.zeros(n)
        if ids.size:
            np.add.at(tick_count, links, 1.0)
            np.add.at(tick_speed, links, speeds)
            pairs = mob.contact_pairs[k]
            if pairs.size:
                lmap = {int(i): int(l) for i, l in zip(ids, links)}
                for vid in {int(x) for x in pairs.ravel()}:
                    tick_contact[lmap[vid]] += 1
        count_sum += tick_count
        speed_sum += tick_speed
        contact_sum += tick_contact
        for e in mob.ended[k]:
            for l in e.links:
                dur_sum[l] += e.duration
                dur_cnt[l] += 1

    with np.errstate(invalid="ignore", divide="ignore"):
        nu = np.where(count_sum > 0, speed_sum / count_sum, 0.0)
        t_lam = np.where(dur_cnt > 0, dur_sum / dur_cnt, 0.0)
    return MobilityFeatures(
        n_vehicles=count_sum / t, nu=nu, lam=contact_sum / t,
        t_lam=t_lam, tx=np.full(n, float(mob.tx)),
    )


def comm_features(mob: MobilityTrace, replay: ReplayResult) -> list[CommFeatures]:
    """Communication half for every replayed configuration."""
    t = mob.n_ticks
    count_sum = np.zeros(mob.net.n)
    for k in range(t):
        if mob.ids[k].size:
            np.add.at(count_sum, mob.link[k], 1.0)
    total = count_sum / t

    out = []
    for row in replay.vc_sum:
        v_c = row / t
        with np.errstate(invalid="ignore", divide="ignore"):
            availability = np.where(total > 0, v_c / total, 0.0)
        out.append(CommFeatures(v_c=v_c, availability=availability))
    return out


# --------------------------------------------------------------------------
# Dataset files: columnar CSV plus a JSON metadata sidecar.


@dataclass
class DatasetMeta:
    n_links: int
    interval: float
    scenario_hash: str
    s_des: float
    dt: float = 1.0
    label_policy: str = "applied"
    scenario: dict = field(default_factory=dict)
    triples: list = field(default_factory=list)  # provenance per triple

    def to_dict(self) -> dict:
        return {
            "n_links": self.n_links,
            "interval": self.interval,
            "scenario_hash": self.scenario_hash,
            "s_des": self.s_des,
            "dt": self.dt,
            "label_policy": self.label_policy,
            "scenario": self.scenario,
            "triples": self.triples,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetMeta":
        try:
            return cls(**doc)
        except TypeError as exc:
            raise DataSchemaError(f"bad dataset metadata: {exc}") from exc


def sidecar_path(path) -> str:
    return str(path) + ".meta.json"


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def export_dataset(triples, path, meta: DatasetMeta) -> None:
    """Write triples as CSV (one row per triple and link) plus the sidecar."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for tid, tr in enumerate(triples):
            pm, pc, label = tr.p_mob, tr.p_com, tr.label
            for l in range(tr.n):
                fh.write(
                    f"{tid},{l},{_fmt(pm.n_vehicles[l])},{_fmt(pm.nu[l])},"
                    f"{_fmt(pm.lam[l])},{_fmt(pm.t_lam[l])},{_fmt(pm.tx[l])},"
                    f"{_fmt(pc.v_c[l])},{_fmt(pc.availability[l])},{label.bits[l]}\n"
                )
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta.to_dict(), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def import_dataset(path):
    """Read a dataset file back into triples (plus metadata when present)."""
    try:
        with open(path) as fh:
            header = fh.readline().rstrip("\n")
            if header != CSV_HEADER:
                raise DataSchemaError(
                    f"unexpected dataset header: {header!r}"
                )
            rows = []
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(",")
                if len(parts) != 10:
                    raise DataSchemaError(f"line {lineno}: expected 10 columns")
                try:
                    rows.append(
                        (int(parts[0]), int(parts[1]))
                        + tuple(float(x) for x in parts[2:9])
                        + (int(parts[9]),)
                    )
                except ValueError as exc:
                    raise DataSchemaError(f"line {lineno}: {exc}") from exc
    except OSError as exc:
        raise DataSchemaError(f"cannot read dataset: {exc}") from exc

    meta = None
    if os.path.exists(sidecar_path(path)):
        with open(sidecar_path(path)) as fh:
            meta = DatasetMeta.from_dict(json.load(fh))

    groups = []
    for row in rows:
        if not groups or row[0] != groups[-1][0][0]:
            groups.append([row])
        else:
            groups[-1].append(row)

    triples = []
    for buf in groups:
        buf.sort(key=lambda r: r[1])
        if [r[1] for r in buf] != list(range(len(buf))):
            raise DataSchemaError(f"triple {buf[0][0]}: link ids not contiguous")
        arr = np.array([r[2:9] for r in buf])
        bits = tuple(int(r[9]) for r in buf)
        p_mob = MobilityFeatures(
            n_vehicles=arr[:, 0], nu=arr[:, 1], lam=arr[:, 2],
            t_lam=arr[:, 3], tx=arr[:, 4],
        )
        p_com = CommFeatures(v_c=arr[:, 5], availability=arr[:, 6])
        triples.append(DatasetTriple(p_mob=p_mob, p_com=p_com, label=AzConfig(bits=bits)))
    return triples, meta


def dataset_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
