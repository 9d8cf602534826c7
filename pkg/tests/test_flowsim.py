import csv

import numpy as np
import pytest
from _fixtures import butterfly

from ncformation.flowsim import (
    SimConfig,
    connection_failure_ratio,
    count_active_links,
    simulate,
    write_report_csv,
    write_trace,
)
from ncformation.formation import form_topology
from ncformation.game import reward
from ncformation.geometry import Scenario, ScenarioConfig, Topology, generate_scenario, reachable


def chain(n, dests):
    pos = np.array([(float(k), 0.0) for k in range(n)])
    return Scenario(pos, 10.0, 1.5, tuple(frozenset(d) for d in dests))


def formed(n, seed, lam=0.1, factor=1.1, policy="shared"):
    sc = generate_scenario(ScenarioConfig(n_nodes=n, delta_factor=factor, dest_policy=policy), seed)
    return sc, form_topology(sc, lam).topology


@pytest.mark.parametrize("mode", ["SF", "NC"])
def test_two_node_chain(mode):
    sc = chain(2, [{2}, ()])
    rep = simulate(sc, Topology.from_links(2, [(1, 2)]), SimConfig(mode=mode))
    assert rep.delivered == {(1, 2): 1}
    assert rep.goodput == 1.0 and rep.per_node_goodput == 0.5


@pytest.mark.parametrize("mode", ["SF", "NC"])
def test_horizon_too_short(mode):
    sc = chain(3, [{3}, (), ()])
    rep = simulate(sc, Topology.from_links(3, [(1, 2), (2, 3)]), SimConfig(mode=mode, slots=1))
    assert rep.delivered == {} and rep.goodput == 0.0


def test_butterfly_hand_stepped_sf():
    sc, topo = butterfly()
    rep = simulate(sc, topo, SimConfig(mode="SF"))
    # Node 3 forwards source 1 at slot 2 and source 2 at slot 3; node 4 relays one slot later.
    assert rep.delivered == {(1, 5): 1, (2, 6): 1, (1, 6): 3, (2, 5): 4}
    assert rep.goodput == 1.0


def test_butterfly_nc_beats_sf():
    sc, topo = butterfly()
    sf = simulate(sc, topo, SimConfig(mode="SF"))
    for seed in range(20):
        nc = simulate(sc, topo, SimConfig(mode="NC", seed=seed))
        assert nc.decode_errors == 0
        assert len(nc.delivered) == 4
        assert nc.last_delivery_slot < sf.last_delivery_slot
        assert nc.goodput > sf.goodput


def test_failure_ratio_examples():
    n = 5
    sc = chain(n, [{3, 5}, {1}, (), {2}, ()])
    ring = Topology.from_links(n, [(k, k % n + 1) for k in range(1, n + 1)])
    assert connection_failure_ratio(sc, ring) == 0.0
    assert connection_failure_ratio(sc, Topology.empty(n)) == 1.0
    half = Topology.from_links(n, [(1, 2), (2, 3)])
    assert connection_failure_ratio(sc, half) == pytest.approx(3 / 4)
    for seed in range(5):
        s2 = generate_scenario(ScenarioConfig(n_nodes=20), seed)
        assert connection_failure_ratio(s2, form_topology(s2, 1.0).topology) == 1.0


def test_count_active_links():
    assert count_active_links(Topology.empty(4)) == 0
    fig3 = Topology.from_links(7, [(1, 2), (2, 4), (4, 6), (4, 5), (5, 7), (3, 1)])
    assert count_active_links(fig3) == 6


def test_zero_cost_clique_link_count():
    sc = generate_scenario(ScenarioConfig(n_nodes=8, delta_factor=3.0, dest_count=1), 4)
    (d,) = sc.destination_set
    want = sum(1 for i in sc.node_ids for j in sc.node_ids if i != j and reward(sc, i, j, d) > 0)
    assert count_active_links(form_topology(sc, 0.0).topology) == want


@pytest.mark.parametrize("mode", ["SF", "NC"])
def test_delivery_soundness_and_liveness(mode):
    for seed in range(40):
        sc, topo = formed(12, seed, lam=0.05 + 0.01 * (seed % 10), policy="random" if seed % 2 else "shared")
        rep = simulate(sc, topo, SimConfig(mode=mode, seed=seed))
        want = {(k, d) for k, d in sc.flows if reachable(topo, k, d)}
        assert set(rep.delivered) == want
        assert rep.decode_errors == 0
        assert rep.connection_failure_ratio == pytest.approx(1 - len(want) / len(sc.flows))


def test_nc_never_slower_on_formed_topologies():
    for seed in range(60):
        sc, topo = formed(15, seed)
        sf = simulate(sc, topo, SimConfig(mode="SF", seed=seed))
        nc = simulate(sc, topo, SimConfig(mode="NC", seed=seed))
        assert set(nc.delivered) == set(sf.delivered)
        assert nc.last_delivery_slot <= sf.last_delivery_slot


def test_determinism():
    sc, topo = formed(15, 3)
    a = simulate(sc, topo, SimConfig(mode="NC", seed=9, trace=True))
    b = simulate(sc, topo, SimConfig(mode="NC", seed=9, trace=True))
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(mode="XX")
    with pytest.raises(ValueError):
        SimConfig(slots=0)
    cfg = SimConfig(mode="nc")
    assert cfg.mode == "NC" and cfg.capacity == 1 and cfg.horizon(7) == 28


def test_csv_and_trace(tmp_path):
    sc, topo = butterfly()
    reps = [simulate(sc, topo, SimConfig(mode=m, trace=True)) for m in ("SF", "NC")]
    write_report_csv(reps, tmp_path / "r.csv")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert [r["mode"] for r in rows] == ["SF", "NC"]
    assert float(rows[1]["goodput"]) == reps[1].goodput
    write_trace(reps[0], tmp_path / "t.csv")
    lines = open(tmp_path / "t.csv").read().splitlines()
    assert lines[0] == "slot,node,header_hex"
    assert lines[1] == "1,1," + "01" + "00" * 5
