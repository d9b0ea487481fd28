import itertools

import numpy as np
import pytest

from fcaz import AzConfig, CostWeights, availability, constraint_met
from fcaz.cost import (
    build_report,
    cost_app,
    cost_congestion,
    cost_loss,
    objective,
)
from fcaz.errors import ValidationError
from fcaz.features import CommFeatures, LinkFeatures


def table(v_c, v_nc, lam, t_lam, nu=None, tx=None):
    n = len(v_c)
    return LinkFeatures(
        v_c=np.array(v_c, float),
        v_nc=np.array(v_nc, float),
        lam=np.array(lam, float),
        t_lam=np.array(t_lam, float),
        nu=np.array(nu, float) if nu is not None else np.full(n, 10.0),
        tx=np.array(tx, float) if tx is not None else np.full(n, 100.0),
    )


def random_table(rng, n):
    lam = rng.uniform(0, 4, n) * rng.integers(0, 2, n)
    t_lam = np.where(lam > 0, rng.uniform(0.5, 9, n), 0.0)
    total = rng.uniform(0, 12, n)
    v_c = total * rng.uniform(0, 1, n)
    return table(v_c, total - v_c, lam, t_lam, nu=rng.uniform(0.1, 15, n))


# ------------------------------------------------------------- availability


def test_availability_baseline_target():
    assert availability(9, 1) == 0.9


def test_availability_empty_link_is_zero():
    assert availability(0, 0) == 0.0
    assert availability(0, 7) == 0.0


def test_availability_half():
    assert availability(5, 5) == 0.5


def test_availability_rejects_negative():
    with pytest.raises(ValidationError):
        availability(-1, 2)


# ------------------------------------------------------------- cost_loss


def test_cost_loss_single_link_arithmetic():
    f = table([4, 0], [6, 0], [4, 0], [5, 0])
    az = AzConfig.from_string("10")
    assert cost_loss(az, f) == 4 * 10 * 100 / 5 == 800.0


def test_cost_loss_all_off_is_zero():
    f = table([1, 1], [1, 1], [2, 2], [3, 3])
    assert cost_loss(AzConfig.all_off(2), f) == 0.0


def test_cost_loss_zero_lambda_term_is_zero():
    f = table([0, 1], [5, 1], [0, 2], [0, 3])
    assert cost_loss(AzConfig.all_on(2), f) == cost_loss(AzConfig.from_string("01"), f)


def test_cost_loss_rejects_corrupt_tlambda():
    with pytest.raises(ValidationError, match="t_lambda"):
        LinkFeatures(v_c=np.zeros(1), v_nc=np.ones(1), lam=np.ones(1),
                     t_lam=np.zeros(1), nu=np.ones(1), tx=np.ones(1))


def test_cost_loss_monotone_under_inclusion():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 10))
        f = random_table(rng, n)
        small = rng.integers(0, 2, n)
        grow = np.maximum(small, rng.integers(0, 2, n))
        a = AzConfig(bits=tuple(int(b) for b in small))
        b = AzConfig(bits=tuple(int(b) for b in grow))
        assert cost_loss(a, f) <= cost_loss(b, f)
        assert cost_app(a, f) <= cost_app(b, f)


# ------------------------------------------------------------- cost_app


def test_cost_app_single_link():
    f = table([5, 0], [5, 0], [1, 0], [1, 0])
    assert cost_app(AzConfig.from_string("10"), f) == 5.0   # 0.5 * 10


def test_cost_app_all_off_zero():
    f = table([5, 5], [5, 5], [1, 1], [1, 1])
    assert cost_app(AzConfig.all_off(2), f) == 0.0


def test_cost_app_equals_enabled_vc():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(1, 9))
        f = random_table(rng, n)
        bits = rng.integers(0, 2, n)
        az = AzConfig(bits=tuple(int(b) for b in bits))
        assert cost_app(az, f) == pytest.approx(f.v_c[bits.astype(bool)].sum(),
                                                rel=1e-12, abs=1e-12)


# ------------------------------------------------------------- objective


def test_objective_k_zero_is_loss_only():
    f = table([1, 2], [1, 2], [1, 2], [2, 2])
    az = AzConfig.from_string("10")
    w = CostWeights(k=0.0, s_des=0.9)
    assert objective(az, f, w) == cost_loss(az, f) / cost_loss(AzConfig.all_on(2), f)


def test_objective_all_on_is_k_plus_one():
    f = table([1, 2], [1, 2], [1, 2], [2, 2])
    for k in (0.0, 0.5, 1.0, 3.0):
        assert objective(AzConfig.all_on(2), f, CostWeights(k=k)) == k + 1.0


def test_objective_all_off_is_zero():
    f = table([1, 2], [1, 2], [1, 2], [2, 2])
    assert objective(AzConfig.all_off(2), f, CostWeights(k=2.0)) == 0.0


def test_objective_zero_reference_component_is_zero():
    f = table([0, 0], [3, 3], [1, 1], [2, 2])   # no carriers anywhere
    assert objective(AzConfig.all_on(2), f, CostWeights(k=5.0)) == 1.0


def test_objective_ranking_matches_hand_enumeration():
    # 3-link toy: independent hand computation of all 8 configurations
    v_c = [2.0, 1.0, 0.5]
    v_nc = [2.0, 3.0, 0.5]
    lam = [2.0, 1.0, 4.0]
    t_lam = [2.0, 5.0, 1.0]
    tx = [100.0, 100.0, 100.0]
    f = table(v_c, v_nc, lam, t_lam, tx=tx)
    k = 1.0

    loss_terms = [lam[i] * (v_c[i] + v_nc[i]) * tx[i] / t_lam[i] for i in range(3)]
    app_terms = [v_c[i] for i in range(3)]

    def hand(bits):
        loss = sum(t for t, b in zip(loss_terms, bits) if b)
        app = sum(t for t, b in zip(app_terms, bits) if b)
        return k * app / sum(app_terms) + loss / sum(loss_terms)

    configs = list(itertools.product((0, 1), repeat=3))
    by_hand = sorted(configs, key=hand)
    by_code = sorted(
        configs, key=lambda c: objective(AzConfig(bits=c), f, CostWeights(k=k))
    )
    assert by_hand == by_code
    for c in configs:
        assert objective(AzConfig(bits=c), f, CostWeights(k=k)) == pytest.approx(
            hand(c), rel=1e-12
        )


# ------------------------------------------------------------- constraint


def test_constraint_met_cases():
    pc = CommFeatures(v_c=np.array([9.5, 9.2]),
                      availability=np.array([0.95, 0.92]))
    assert constraint_met(pc, [0, 1], 0.9)
    pc2 = CommFeatures(v_c=np.array([9.5, 8.9]),
                       availability=np.array([0.95, 0.89]))
    assert not constraint_met(pc2, [0, 1], 0.9)


def test_constraint_vacuous_at_zero_target():
    pc = CommFeatures(v_c=np.zeros(3), availability=np.zeros(3))
    assert constraint_met(pc, [0, 1, 2], 0.0)


def test_constraint_rejects_empty_zoi():
    pc = CommFeatures(v_c=np.zeros(1), availability=np.zeros(1))
    with pytest.raises(ValidationError):
        constraint_met(pc, [], 0.9)


# ------------------------------------------------------------- congestion


def test_congestion_stalled_traffic():
    f = table([0], [10], [0], [0], nu=[0.0])
    assert cost_congestion(f, [0]) == 10.0


def test_congestion_empty_set():
    f = table([0], [10], [0], [0])
    assert cost_congestion(f, []) == 0.0


def test_congestion_vanishes_at_high_speed():
    f = table([0], [10], [0], [0], nu=[1e9])
    assert cost_congestion(f, [0]) < 1e-7


# ------------------------------------------------------------- weights/report


def test_costweights_validation():
    with pytest.raises(ValidationError):
        CostWeights(k=-0.1)
    with pytest.raises(ValidationError):
        CostWeights(s_des=1.5)


def test_report_roundtrips_to_json(cell_net):
    f = random_table(np.random.default_rng(1), cell_net.n)
    rep = build_report(AzConfig.all_on(cell_net.n), f, cell_net.zoi, CostWeights())
    doc = rep.to_dict()
    assert doc["total"] == pytest.approx(2.0)
    assert set(doc["availability_zoi"]) == {"5"}
