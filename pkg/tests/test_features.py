import numpy as np
import pytest

from fcaz import AzConfig, Scenario, aggregate, make_triple, run_interval, sample_frame
from fcaz.engine import Contact, ContactEnd, TickRecord
from fcaz.errors import DataSchemaError, ValidationError
from fcaz.features import (
    CommFeatures,
    DatasetMeta,
    LinkFeatures,
    MobilityFeatures,
    combine,
    export_dataset,
    features_from_trace,
    import_dataset,
    sidecar_path,
)
from fcaz.mobility import VehicleState, spawn_trips
from fcaz.scenario import build_network


def vehicle(vid, link, speed=10.0, content=False, offset=0.0):
    return VehicleState(id=vid, link=link, offset=offset, direction=1,
                        speed=speed, cruise_speed=speed, route=(link,),
                        has_content=content)


def tick(vehicles, contacts=(), ended=(), t=1.0):
    return TickRecord(t=t, vehicles=list(vehicles), contacts=list(contacts),
                      ended_contacts=list(ended), arrivals=0, departures=0)


def test_sample_frame_empty_link(cell_net):
    f = sample_frame(tick([]), cell_net)
    assert not f.n_vehicles.any()
    assert not f.n_carriers.any()
    assert not f.n_in_contact.any()
    assert not f.speed_sum.any()


def test_sample_frame_counts(cell_net):
    f = sample_frame(tick([vehicle(0, 3, content=True), vehicle(1, 3)]), cell_net)
    assert f.n_vehicles[3] == 2
    assert f.n_carriers[3] == 1


def test_cross_link_contact_counts_on_both_links(cell_net):
    vs = [vehicle(0, 2), vehicle(1, 3)]
    c = Contact(pair=(0, 1), start_time=1.0, duration=1.0)
    f = sample_frame(tick(vs, contacts=[c]), cell_net)
    assert f.n_in_contact[2] == 1
    assert f.n_in_contact[3] == 1


def test_aggregate_of_constant_frames_is_the_frame(cell_net):
    frames = [sample_frame(tick([vehicle(0, 1, speed=8.0)]), cell_net)] * 5
    p_mob, p_com = aggregate(frames, tx=100.0)
    assert p_mob.n_vehicles[1] == 1.0
    assert p_mob.nu[1] == 8.0
    assert p_com.v_c[1] == 0.0


def test_aggregate_mean_vc(cell_net):
    frames = []
    for carriers in (0, 0, 10, 10):
        vs = [vehicle(i, 0, content=(i < carriers)) for i in range(10)]
        frames.append(sample_frame(tick(vs), cell_net))
    _, p_com = aggregate(frames, tx=100.0)
    assert p_com.v_c[0] == 5.0


def test_aggregate_contact_durations(cell_net):
    e1 = ContactEnd(pair=(0, 1), duration=4.0, links=(2,))
    e2 = ContactEnd(pair=(2, 3), duration=6.0, links=(2,))
    frames = [
        sample_frame(tick([vehicle(0, 2)], ended=[e1]), cell_net),
        sample_frame(tick([vehicle(0, 2)], ended=[e2]), cell_net),
    ]
    p_mob, _ = aggregate(frames, tx=100.0)
    assert p_mob.t_lam[2] == 5.0


def test_aggregate_requires_frames():
    with pytest.raises(ValidationError):
        aggregate([], tx=100.0)


def test_aggregate_permutation_invariant(cell_net, cell_scenario):
    sched = spawn_trips(cell_net, 0.5, 120, 2)
    scenario = cell_scenario.replace(interval=120.0, duration=120.0)
    trace = run_interval(cell_net, AzConfig.all_on(cell_net.n), sched, scenario)
    frames = [sample_frame(t, cell_net) for t in trace.ticks]
    a = aggregate(frames, trace.tx)
    rng = np.random.default_rng(0)
    perm = [frames[i] for i in rng.permutation(len(frames))]
    b = aggregate(perm, trace.tx)
    assert np.allclose(a[0].matrix(), b[0].matrix(), rtol=0, atol=1e-12)
    assert np.allclose(a[1].v_c, b[1].v_c, rtol=0, atol=1e-12)


def test_make_triple_checks_dimensions(cell_net):
    p_mob = MobilityFeatures(*(np.zeros(5),) * 5)
    p_com = CommFeatures(np.zeros(5), np.zeros(5))
    with pytest.raises(ValidationError):
        make_triple(p_mob, p_com, AzConfig.all_on(4))
    triple = make_triple(p_mob, p_com, AzConfig.all_off(5))
    assert triple.n == 5


def test_all_off_triple_is_self_consistent():
    n = 6
    p_mob = MobilityFeatures(
        n_vehicles=np.full(n, 2.0), nu=np.full(n, 8.0), lam=np.zeros(n),
        t_lam=np.zeros(n), tx=np.full(n, 100.0),
    )
    p_com = CommFeatures(v_c=np.zeros(n), availability=np.zeros(n))
    triple = make_triple(p_mob, p_com, AzConfig.all_off(n))
    assert combine(triple.p_mob, triple.p_com).v_nc.sum() == 12.0


def test_thirty_five_street_map_from_scenario():
    scenario = Scenario(
        arrival_rate=0.1, duration=300, network={
            "grid": {"rows": 3, "cols": 5, "drop_links": [0, 4, 37], "zoi": [17]},
        },
    )
    net = build_network(scenario)
    assert net.n == 35
    sched = spawn_trips(net, 2.0, 60, 0)
    trace = run_interval(net, AzConfig.all_on(35), sched,
                         scenario.replace(interval=60.0))
    p_mob, p_com = features_from_trace(trace)
    triple = make_triple(p_mob, p_com, AzConfig.all_on(35))
    assert triple.n == 35 and triple.p_mob.matrix().shape == (35, 5)


def test_pmob_invariant_across_az(cell_net, cell_scenario):
    sched = spawn_trips(cell_net, 0.5, 300, 14)
    rng = np.random.default_rng(5)
    reference = None
    for _ in range(3):
        bits = tuple(int(b) for b in rng.integers(0, 2, cell_net.n))
        trace = run_interval(cell_net, AzConfig(bits=bits), sched, cell_scenario,
                             rng_seed=14)
        p_mob, _ = features_from_trace(trace)
        if reference is None:
            reference = p_mob.matrix()
        else:
            assert np.array_equal(reference, p_mob.matrix())


def test_availability_times_total_equals_vc(cell_net, cell_scenario):
    sched = spawn_trips(cell_net, 0.5, 300, 15)
    trace = run_interval(cell_net, AzConfig.all_on(cell_net.n), sched, cell_scenario)
    p_mob, p_com = features_from_trace(trace)
    assert np.all(np.abs(p_com.availability * p_mob.n_vehicles - p_com.v_c) < 1e-9)


def test_linkfeatures_invariants():
    with pytest.raises(ValidationError):
        LinkFeatures(v_c=np.array([-1.0]), v_nc=np.zeros(1), lam=np.zeros(1),
                     t_lam=np.zeros(1), nu=np.zeros(1), tx=np.zeros(1))
    with pytest.raises(ValidationError):
        LinkFeatures(v_c=np.zeros(1), v_nc=np.zeros(1), lam=np.ones(1),
                     t_lam=np.zeros(1), nu=np.zeros(1), tx=np.zeros(1))


# ---------------------------------------------------------------- files


def synthetic_triples(n_triples, n_links, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_triples):
        lam = rng.uniform(0, 3, n_links)
        t_lam = np.where(lam > 0, rng.uniform(1, 9, n_links), 0.0)
        total = rng.uniform(0, 10, n_links)
        v_c = total * rng.uniform(0, 1, n_links)
        avail = np.where(total > 0, v_c / total, 0.0)
        p_mob = MobilityFeatures(n_vehicles=total, nu=rng.uniform(1, 15, n_links),
                                 lam=lam, t_lam=t_lam,
                                 tx=np.full(n_links, 100.0))
        p_com = CommFeatures(v_c=v_c, availability=avail)
        bits = tuple(int(b) for b in rng.integers(0, 2, n_links))
        out.append(make_triple(p_mob, p_com, AzConfig(bits=bits)))
    return out


def meta_for(n_links):
    return DatasetMeta(n_links=n_links, interval=300.0, scenario_hash="abc",
                       s_des=0.9)


def test_dataset_roundtrip(tmp_path):
    triples = synthetic_triples(7, 5)
    path = tmp_path / "data.csv"
    export_dataset(triples, path, meta_for(5))
    back, meta = import_dataset(path)
    assert len(back) == 7
    assert meta.s_des == 0.9 and meta.n_links == 5
    # equal up to the 9-significant-digit text format (half-ulp 5e-9)
    for a, b in zip(triples, back):
        assert np.allclose(a.p_mob.matrix(), b.p_mob.matrix(), rtol=5e-9, atol=0)
        assert np.allclose(a.p_com.v_c, b.p_com.v_c, rtol=5e-9, atol=0)
        assert a.label.bits == b.label.bits
    # a second export of the imported triples is byte-identical (fixed point)
    path2 = tmp_path / "data2.csv"
    export_dataset(back, path2, meta_for(5))
    assert path2.read_bytes() == path.read_bytes()


def test_empty_dataset_roundtrip(tmp_path):
    path = tmp_path / "empty.csv"
    export_dataset([], path, meta_for(4))
    back, meta = import_dataset(path)
    assert back == [] and meta.n_links == 4


def test_dataset_row_count(tmp_path):
    triples = synthetic_triples(1000, 35)
    path = tmp_path / "big.csv"
    export_dataset(triples, path, meta_for(35))
    n_rows = sum(1 for _ in open(path)) - 1
    assert n_rows == 35_000


def test_dataset_preserves_order(tmp_path):
    a = synthetic_triples(4, 3, seed=1)
    b = synthetic_triples(4, 3, seed=2)
    path = tmp_path / "mixed.csv"
    export_dataset(a + b, path, meta_for(3))
    back, _ = import_dataset(path)
    for orig, got in zip(a + b, back):
        assert np.allclose(orig.p_mob.matrix(), got.p_mob.matrix(), rtol=5e-9, atol=0)


def test_import_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("nope\n")
    with pytest.raises(DataSchemaError, match="header"):
        import_dataset(path)


def test_import_rejects_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    export_dataset(synthetic_triples(1, 3), path, meta_for(3))
    lines = path.read_text().splitlines()
    lines.append("0,3,oops")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataSchemaError, match="columns"):
        import_dataset(path)


def test_sidecar_written(tmp_path):
    path = tmp_path / "d.csv"
    export_dataset(synthetic_triples(2, 3), path, meta_for(3))
    import json

    doc = json.loads(open(sidecar_path(path)).read())
    assert doc["scenario_hash"] == "abc"
    assert doc["s_des"] == 0.9
