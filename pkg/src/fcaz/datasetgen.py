"""Dataset generation: communication strategies applied per interval.

Each interval of the scenario gets its own Poisson arrivals and an
independent mobility trace; the sampled strategies (supersets of the
zoi-only configuration at enabled fractions spanning the requested range,
each with its own seeding fraction) are replayed over that one trace. One
triple is produced per (strategy, interval).

Two labeling policies:

* ``applied``  - the triple keeps the strategy that produced it; the
  availability check downstream relabels failures all-OFF.
* ``optimal``  - the triple is labeled with the best configuration of its
  interval (exhaustive search when the link count permits, greedy beyond),
  or all-OFF when even all-ON misses the target.
"""
from __future__ import annotations

import math

import numpy as np

from .cost import CostWeights
from .engine import AzConfig, replay_content, simulate_mobility
from .errors import ValidationError
from .features import (
    DatasetMeta,
    comm_features,
    make_triple,
    mobility_features,
)
from .mobility import spawn_trips
from .optimizer import (
    BRUTE_FORCE_DEFAULT_CAP,
    brute_force_on_traces,
    greedy_on_traces,
)
from .roadnet import RoadNet
from .scenario import Scenario, scenario_hash

LABEL_POLICIES = ("applied", "optimal")


def interval_seed(scenario: Scenario, interval_index: int) -> int:
    """Seed driving one interval's arrivals, cruise speeds, and seeding."""
    seq = np.random.SeedSequence((scenario.rng_seed, int(interval_index)))
    return int(seq.generate_state(1)[0])


def strategy_configs(net: RoadNet, n_strategies: int, fraction_range, rng):
    """Sampled strategies: zoi supersets with fractions spanning the range.

    Enabled fractions are evenly spaced over the range; which extra links
    carry each strategy, and its seeding fraction, are drawn from ``rng``.
    """
    lo, hi = float(fraction_range[0]), float(fraction_range[1])
    if not (0 < lo <= hi <= 1):
        raise ValidationError("fraction range must satisfy 0 < lo <= hi <= 1")
    zoi = sorted(net.zoi)
    free = np.array([i for i in range(net.n) if i not in set(zoi)])
    rows = np.zeros((n_strategies, net.n), dtype=bool)
    rows[:, zoi] = True
    span = np.linspace(lo, hi, n_strategies) if n_strategies > 1 else np.array([hi])
    fractions = np.empty(n_strategies)
    seeding = np.empty(n_strategies)
    for s in range(n_strategies):
        f = float(span[s])
        n_enabled = max(len(zoi), math.ceil(f * net.n))
        extra = min(n_enabled - len(zoi), len(free))
        if extra > 0:
            chosen = rng.choice(free, size=extra, replace=False)
            rows[s, chosen] = True
        fractions[s] = f
        seeding[s] = rng.uniform(lo, hi)
    return rows, fractions, seeding


def generate_dataset(
    net: RoadNet,
    scenario: Scenario,
    n_strategies: int,
    fraction_range=(0.05, 1.0),
    label_policy: str = "applied",
    max_n_brute: int = BRUTE_FORCE_DEFAULT_CAP,
):
    """Produce triples plus their sidecar metadata for one scenario."""
    if label_policy not in LABEL_POLICIES:
        raise ValidationError(f"label_policy must be one of {LABEL_POLICIES}")
    if n_strategies < 1:
        raise ValidationError("need at least one strategy")
    if not net.zoi:
        raise ValidationError("dataset generation requires a non-empty zoi")
    n_intervals = scenario.n_intervals
    if n_intervals < 1:
        raise ValidationError("scenario duration is shorter than one interval")

    weights = CostWeights(k=scenario.k_weight, s_des=scenario.s_des)
    use_brute = net.n <= max_n_brute
    policy_detail = label_policy
    if label_policy == "optimal":
        policy_detail = f"optimal[{'brute' if use_brute else 'greedy'}]"

    triples = []
    records = []
    for i in range(n_intervals):
        seed = interval_seed(scenario, i)
        schedule = spawn_trips(net, scenario.arrival_rate, scenario.interval, seed)
        mob = simulate_mobility(net, schedule, scenario, rng_seed=seed)
        p_mob = mobility_features(mob)

        rng = np.random.default_rng(
            np.random.SeedSequence((scenario.rng_seed, i, 1))
        )
        rows, fractions, seeding = strategy_configs(
            net, n_strategies, fraction_range, rng
        )
        rep = replay_content(mob, rows, seeding, seed)
        p_coms = comm_features(mob, rep)

        label_override = None
        if label_policy == "optimal":
            search = brute_force_on_traces if use_brute else greedy_on_traces
            result = search(net, [(mob, seed)], scenario, weights)
            label_override = (
                result.config if result is not None else AzConfig.all_off(net.n)
            )

        for s in range(n_strategies):
            applied = AzConfig(bits=tuple(int(b) for b in rows[s]))
            label = label_override if label_override is not None else applied
            triples.append(make_triple(p_mob, p_coms[s], label))
            records.append(
                {
                    "id": len(records),
                    "interval": i,
                    "seed": seed,
                    "enabled_fraction": float(fractions[s]),
                    "seeding_fraction": float(seeding[s]),
                    "applied": applied.to_string(),
                }
            )

    meta = DatasetMeta(
        n_links=net.n,
        interval=scenario.interval,
        scenario_hash=scenario_hash(scenario),
        s_des=scenario.s_des,
        dt=scenario.dt,
        label_policy=policy_detail,
        scenario=scenario.to_dict(),
        triples=records,
    )
    return triples, meta
