"""Scenario engine: conservation, determinism, cost accounting, exports."""

import pytest

from conftest import make_chain
from hybridnet.controller import Controller
from hybridnet.costmodel import CostModel
from hybridnet.errors import UnprovisionedTarget
from hybridnet.network import Network
from hybridnet.scenario import TrafficSpec, run_scenario
from hybridnet.topo import generate_random

CM = CostModel.default()


def provisioned_chain(n_core=1, vll=True, pw=False, **net_kwargs):
    t = make_chain(n_core=n_core, vll=vll, pw=pw)
    net = Network(t, **net_kwargs)
    Controller(net).provision_all()
    return t, net


def test_zero_traffic_zero_counters():
    t, net = provisioned_chain()
    result = run_scenario(net, [])
    assert result.injected == result.delivered == result.dropped == 0
    assert all(s.cost == 0.0 for s in result.nodes.values())


def test_vll_conservation_10000_packets():
    t, net = provisioned_chain()
    flow = TrafficSpec(flow_id="f1", rate_pps=1000, pkt_bytes=1000,
                       duration_s=10.0, service_id="v1")
    result = run_scenario(net, [flow])
    f = result.flows["f1"]
    assert f.injected == 10000
    assert f.delivered == 10000
    assert f.dropped == 0


def test_conservation_with_drops():
    # best-effort traffic to an unknown address drops with a reason
    t, net = provisioned_chain()
    ok = TrafficSpec(flow_id="ok", rate_pps=200, pkt_bytes=200, duration_s=1.0,
                     src_ce="ce1", dst_ce="ce2")
    result = run_scenario(net, [ok])
    f = result.flows["ok"]
    assert f.injected == f.delivered + f.dropped
    assert f.delivered == 200


def test_fractional_rates_accumulate():
    t, net = provisioned_chain()
    flow = TrafficSpec(flow_id="f1", rate_pps=333, pkt_bytes=500, duration_s=3.0,
                       service_id="v1")
    result = run_scenario(net, [flow])
    assert result.flows["f1"].injected == 999


def test_unprovisioned_service_rejected():
    t, net = provisioned_chain(vll=False)
    flow = TrafficSpec(flow_id="f1", rate_pps=10, pkt_bytes=100, duration_s=0.1,
                       service_id="ghost")
    with pytest.raises(UnprovisionedTarget):
        run_scenario(net, [flow])


def test_byte_identical_exports_for_same_inputs():
    outs = []
    for _ in range(2):
        t, net = provisioned_chain()
        flows = [
            TrafficSpec(flow_id="svc", rate_pps=400, pkt_bytes=700, duration_s=1.5,
                        service_id="v1"),
            TrafficSpec(flow_id="be", rate_pps=150, pkt_bytes=300, duration_s=1.0,
                        src_ce="ce1", dst_ce="ce2"),
        ]
        result = run_scenario(net, flows, seed=77, sample_count=10)
        outs.append((result.to_json(), result.to_csv()))
    assert outs[0] == outs[1]


def test_router_ip_load_matches_saturation_anchor():
    t, net = provisioned_chain(vll=False, plain_router=True)
    flow = TrafficSpec(flow_id="f1", rate_pps=14000, pkt_bytes=1000,
                       duration_s=0.5, src_ce="ce1", dst_ce="ce2")
    result = run_scenario(net, [flow])
    assert result.nodes["pe1"].cpu_load == pytest.approx(1.0, rel=1e-6)
    assert result.nodes["pe1"].saturation_estimate == pytest.approx(14000.0)


def test_hybrid_ip_load_and_saturation():
    t, net = provisioned_chain(vll=False)
    flow = TrafficSpec(flow_id="f1", rate_pps=2500, pkt_bytes=1000,
                       duration_s=0.5, src_ce="ce1", dst_ce="ce2")
    result = run_scenario(net, [flow])
    expected = 2500 * (2 * CM.c_ofcs_lookup + CM.c_ip_forward)
    assert result.nodes["pe1"].cpu_load == pytest.approx(expected, rel=1e-9)
    assert result.nodes["pe1"].saturation_estimate == pytest.approx(12500.0)


def test_vll_and_pw_node_costs_match_formula():
    t, net = provisioned_chain(vll=True, pw=False)
    flow = TrafficSpec(flow_id="f1", rate_pps=1000, pkt_bytes=800, duration_s=1.0,
                       service_id="v1")
    result = run_scenario(net, [flow])
    vll_cost = CM.c_ofcs_lookup + CM.c_mpls_op
    assert result.nodes["pe1"].cpu_load == pytest.approx(1000 * vll_cost, rel=1e-9)
    assert result.nodes["cr1"].cpu_load == pytest.approx(1000 * vll_cost, rel=1e-9)

    t2, net2 = provisioned_chain(vll=False, pw=True)
    flow2 = TrafficSpec(flow_id="f2", rate_pps=1000, pkt_bytes=800, duration_s=1.0,
                        service_id="p1")
    result2 = run_scenario(net2, [flow2])
    pw_cost = 2 * CM.c_ofcs_lookup + CM.c_mpls_op + CM.c_ace_gre
    assert result2.nodes["pe1"].cpu_load == pytest.approx(1000 * pw_cost, rel=1e-9)
    assert result2.nodes["pe2"].cpu_load == pytest.approx(1000 * pw_cost, rel=1e-9)
    # transit swaps cost the same as a VLL hop
    assert result2.nodes["cr1"].cpu_load == pytest.approx(1000 * vll_cost, rel=1e-9)


def test_tunnel_cost_added_once_per_node():
    t, net = provisioned_chain(vll=False, tunneling="vxlan")
    flow = TrafficSpec(flow_id="f1", rate_pps=1000, pkt_bytes=500, duration_s=0.5,
                       src_ce="ce1", dst_ce="ce2")
    result = run_scenario(net, [flow])
    expected = 1000 * (2 * CM.c_ofcs_lookup + CM.c_ip_forward + CM.c_vxlan_encap)
    assert result.nodes["pe1"].cpu_load == pytest.approx(expected, rel=1e-9)


def test_flow_cache_hit_miss_ratio():
    loads = {}
    for mode in ("on", "off"):
        t, net = provisioned_chain(flow_cache=mode)
        flow = TrafficSpec(flow_id="f1", rate_pps=1000, pkt_bytes=600,
                           duration_s=2.0, service_id="v1")
        result = run_scenario(net, [flow])
        loads[mode] = result.nodes["cr1"].cpu_load
    assert loads["on"] / loads["off"] == pytest.approx(40.0 / 94.0, rel=0.05)


def test_single_miss_for_long_flow():
    t, net = provisioned_chain(flow_cache="on")
    flow = TrafficSpec(flow_id="f1", rate_pps=1000, pkt_bytes=600, duration_s=1.0,
                       service_id="v1")
    result = run_scenario(net, [flow])
    vll_cost = CM.c_ofcs_lookup + CM.c_mpls_op
    expected = 999 * vll_cost + CM.c_userspace_miss
    assert result.nodes["cr1"].cost == pytest.approx(expected, rel=1e-9)


def test_samples_sum_to_total_cost():
    t, net = provisioned_chain()
    flow = TrafficSpec(flow_id="f1", rate_pps=500, pkt_bytes=900, duration_s=1.0,
                       service_id="v1")
    result = run_scenario(net, [flow], sample_count=20)
    series = result.samples["pe1"]
    assert len(series) == 20
    interval = result.duration_s / 20
    assert sum(s * interval for s in series) == pytest.approx(
        result.nodes["pe1"].cost, rel=1e-9)


def test_isolation_services_do_not_touch_each_other():
    t = make_chain(n_core=1, vll=True, pw=False)
    from hybridnet.topo import AccessEndpoint, ServiceSpec
    t.services.append(ServiceSpec(id="p1", kind="Pw", endpoints=[
        AccessEndpoint("pe1", "2", vlan=60), AccessEndpoint("pe2", "2", vlan=60)]))
    net = Network(t)
    ctrl = Controller(net)
    ctrl.provision_all()
    vll_rules = {rid for (_n, _t, rid) in net.provisioned["v1"].rules}
    pw_rules = {rid for (_n, _t, rid) in net.provisioned["p1"].rules}
    flow = TrafficSpec(flow_id="f1", rate_pps=100, pkt_bytes=400, duration_s=1.0,
                       service_id="v1")
    run_scenario(net, [flow])
    for node in net.nodes.values():
        for table in (node.table0, node.table1):
            for rule in table.rules:
                if rule.rule_id in pw_rules:
                    assert rule.packets == 0, rule.rule_id


def test_best_effort_unchanged_by_provisioning():
    t = generate_random(3, 3, 1, 0.25, 9)
    seed_flow = [TrafficSpec(flow_id="be", rate_pps=100, pkt_bytes=200,
                             duration_s=0.5, src_ce="ce1_1", dst_ce="ce3_1")]
    net1 = Network(t)
    before = run_scenario(net1, seed_flow).flows["be"].to_doc()

    from hybridnet.topo import AccessEndpoint, ServiceSpec
    t2 = generate_random(3, 3, 1, 0.25, 9)
    svc = ServiceSpec(id="v1", kind="IpVll", endpoints=[
        AccessEndpoint("pe1", t2.access_ports("pe1")[0], vlan=80),
        AccessEndpoint("pe2", t2.access_ports("pe2")[0], vlan=80)])
    t2.services.append(svc)
    net2 = Network(t2)
    Controller(net2).provision_all()
    after = run_scenario(net2, seed_flow).flows["be"].to_doc()
    assert before == after
