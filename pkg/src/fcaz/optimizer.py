"""Anchor-zone selection: trivial bounds, exhaustive oracle, greedy search.

The search space is restricted to supersets of the zoi-only configuration:
content must at least float where the application measures availability.
Every candidate is evaluated by replaying the content rules over one shared
mobility trace, so a batch of configurations costs one mobility simulation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostWeights, build_report, loss_terms
from .engine import AzConfig, replay_content, simulate_mobility
from .errors import ValidationError
from .features import CommFeatures, combine, comm_features, mobility_features
from .roadnet import RoadNet
from .scenario import Scenario

BRUTE_FORCE_DEFAULT_CAP = 20


@dataclass(frozen=True)
class OptimizeResult:
    config: AzConfig
    report: CostReport
    p_com: CommFeatures
    method: str
    n_evaluated: int


def trivial_bounds(net: RoadNet) -> tuple[AzConfig, AzConfig]:
    """The two bounding configurations: everything on, and the zoi alone."""
    return AzConfig.all_on(net.n), AzConfig.from_ids(net.n, sorted(net.zoi))


def _replication_seeds(rng_seed: int, r: int):
    if r == 1:
        return [rng_seed]
    return [
        int(np.random.SeedSequence((rng_seed, i)).generate_state(1)[0])
        for i in range(r)
    ]


def _as_schedules(schedule):
    return list(schedule) if isinstance(schedule, (list, tuple)) else [schedule]


def _batch_features_from_mobs(net, mobs_and_seeds, scenario, az_matrix):
    """Averaged (p_mob, per-config p_com) across replications.

    With a single trace this reproduces exactly what ``run_interval``
    followed by feature aggregation yields for each configuration.
    """
    mob_acc = None
    vc = None
    total = None
    for mob, seed in mobs_and_seeds:
        rep = replay_content(
            mob, az_matrix, [scenario.seeding_fraction] * az_matrix.shape[0], seed
        )
        p_mob = mobility_features(mob)
        coms = comm_features(mob, rep)
        if mob_acc is None:
            mob_acc = p_mob.matrix()
            vc = np.array([c.v_c for c in coms])
            total = p_mob.n_vehicles.copy()
        else:
            mob_acc += p_mob.matrix()
            vc += np.array([c.v_c for c in coms])
            total += p_mob.n_vehicles

    r = len(mobs_and_seeds)
    from .features import MobilityFeatures

    mat = mob_acc / r
    p_mob = MobilityFeatures(
        n_vehicles=mat[:, 0], nu=mat[:, 1], lam=mat[:, 2], t_lam=mat[:, 3],
        tx=mat[:, 4],
    )
    vc = vc / r
    total = total / r
    with np.errstate(invalid="ignore", divide="ignore"):
        avail = np.where(total > 0, vc / total, 0.0)
    p_coms = [CommFeatures(v_c=vc[i], availability=avail[i]) for i in range(vc.shape[0])]
    return p_mob, p_coms


def _objectives(az_matrix, p_mob, p_coms, weights):
    terms = loss_terms(combine(p_mob, p_coms[0]))
    loss_ref = terms.sum()
    loss = np.where(az_matrix, terms[None, :], 0.0).sum(axis=1)
    loss_norm = loss / loss_ref if loss_ref > 0 else np.zeros(len(loss))
    vals = np.empty(az_matrix.shape[0])
    for i, pc in enumerate(p_coms):
        app = float(np.where(az_matrix[i], pc.v_c, 0.0).sum())
        ref = float(pc.v_c.sum())
        app_norm = app / ref if ref > 0 else 0.0
        vals[i] = weights.k * app_norm + loss_norm[i]
    return vals


def superset_matrix(n: int, zoi) -> np.ndarray:
    """Every configuration enabling at least the zoi, in a stable order."""
    zoi = sorted(zoi)
    free = [i for i in range(n) if i not in set(zoi)]
    m = 1 << len(free)
    out = np.zeros((m, n), dtype=bool)
    out[:, zoi] = True
    masks = np.arange(m)
    for bit, link in enumerate(free):
        out[:, link] = out[:, link] | ((masks >> bit) & 1).astype(bool)
    out[:, zoi] = True
    return out


def brute_force(
    net: RoadNet,
    schedule,
    scenario: Scenario,
    weights: CostWeights,
    rng_seed: int = 0,
    max_n: int = BRUTE_FORCE_DEFAULT_CAP,
):
    """Exhaustive oracle over all supersets of the zoi-only configuration.

    Returns the feasible configuration minimizing the objective (ties: fewer
    enabled links, then lexicographically smaller bits), or None when even
    all-ON fails the availability target.
    """
    if net.n > max_n:
        raise ValidationError(
            f"brute force refused: {net.n} links exceeds the cap of {max_n}"
        )
    if not net.zoi:
        raise ValidationError("optimization requires a non-empty zoi")
    schedules = _as_schedules(schedule)
    seeds = _replication_seeds(rng_seed, len(schedules))
    mobs = [
        (simulate_mobility(net, sched, scenario, rng_seed=seed), seed)
        for sched, seed in zip(schedules, seeds)
    ]
    return brute_force_on_traces(net, mobs, scenario, weights, max_n=max_n)


def brute_force_on_traces(net, mobs_and_seeds, scenario, weights, max_n=BRUTE_FORCE_DEFAULT_CAP):
    """Exhaustive search over precomputed mobility traces."""
    if net.n > max_n:
        raise ValidationError(
            f"brute force refused: {net.n} links exceeds the cap of {max_n}"
        )
    az = superset_matrix(net.n, net.zoi)
    p_mob, p_coms = _batch_features_from_mobs(net, mobs_and_seeds, scenario, az)

    zoi = sorted(net.zoi)
    feasible = np.array(
        [bool((pc.availability[zoi] >= weights.s_des).all()) for pc in p_coms]
    )
    if not feasible.any():
        return None

    vals = _objectives(az, p_mob, p_coms, weights)
    idx = np.flatnonzero(feasible)
    counts = az[idx].sum(axis=1)
    keys = [az[idx][:, c].astype(int) for c in range(net.n - 1, -1, -1)]
    order = np.lexsort(keys + [counts, vals[idx]])
    best = int(idx[order[0]])

    config = AzConfig(bits=tuple(int(b) for b in az[best]))
    report = build_report(config, combine(p_mob, p_coms[best]), net.zoi, weights)
    return OptimizeResult(
        config=config, report=report, p_com=p_coms[best],
        method="brute", n_evaluated=az.shape[0],
    )


def greedy(
    net: RoadNet,
    schedule,
    scenario: Scenario,
    weights: CostWeights,
    rng_seed: int = 0,
):
    """Grow from the zoi-only configuration until the target is met.

    Each round re-simulates every frontier link and adds the one with the
    best gain in minimum zoi availability per unit of objective increase
    (ties: smallest link id). Stops at feasibility or all-ON.
    """
    if not net.zoi:
        raise ValidationError("optimization requires a non-empty zoi")
    schedules = _as_schedules(schedule)
    seeds = _replication_seeds(rng_seed, len(schedules))
    mobs = [
        (simulate_mobility(net, sched, scenario, rng_seed=seed), seed)
        for sched, seed in zip(schedules, seeds)
    ]
    return greedy_on_traces(net, mobs, scenario, weights)


def greedy_on_traces(net, mobs_and_seeds, scenario, weights):
    """Greedy growth over precomputed mobility traces."""
    if not net.zoi:
        raise ValidationError("optimization requires a non-empty zoi")
    zoi = sorted(net.zoi)
    enabled = set(zoi)
    n_evaluated = 0

    def evaluate(rows):
        nonlocal n_evaluated
        az = np.array(rows, dtype=bool)
        p_mob, p_coms = _batch_features_from_mobs(net, mobs_and_seeds, scenario, az)
        vals = _objectives(az, p_mob, p_coms, weights)
        n_evaluated += az.shape[0]
        return p_mob, p_coms, vals

    def row(links):
        r = np.zeros(net.n, dtype=bool)
        r[sorted(links)] = True
        return r

    p_mob, p_coms, vals = evaluate([row(enabled)])
    cur_com, cur_obj = p_coms[0], float(vals[0])
    cur_avail = float(cur_com.availability[zoi].min())

    while True:
        if (cur_com.availability[zoi] >= weights.s_des).all():
            config = AzConfig.from_ids(net.n, sorted(enabled))
            report = build_report(config, combine(p_mob, cur_com), net.zoi, weights)
            return OptimizeResult(
                config=config, report=report, p_com=cur_com,
                method="greedy", n_evaluated=n_evaluated,
            )
        if len(enabled) == net.n:
            return None
        frontier = sorted(
            {a for l in enabled for a in net.adjacency[l]} - enabled
        )
        rows = [row(enabled | {c}) for c in frontier]
        p_mob, p_coms, vals = evaluate(rows)

        best = None
        best_score = -np.inf
        for i, c in enumerate(frontier):
            gain = float(p_coms[i].availability[zoi].min()) - cur_avail
            delta = max(float(vals[i]) - cur_obj, 1e-12)
            score = gain / delta
            if score > best_score:
                best, best_score = i, score
        enabled.add(frontier[best])
        cur_com, cur_obj = p_coms[best], float(vals[best])
        cur_avail = float(cur_com.availability[zoi].min())
