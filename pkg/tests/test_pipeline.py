"""Flow-table pipeline: bootstrap rule layout, matching, action semantics."""

import pytest

from conftest import make_chain
from hybridnet.costmodel import CostModel
from hybridnet.errors import RuleConflict
from hybridnet.flowtable import (Match, goto_table, output, set_mpls_label)
from hybridnet.frames import (ETH_BDDP, ETH_LLDP, Frame, arp_frame, ip_frame)
from hybridnet.network import Network, NodeState, internal_port

CM = CostModel.default()


def make_node(n_ports=3, vll=True):
    node = NodeState("cr1", "CoreRouter", 1, "10.0.0.1")
    node.phys_ports = [str(i + 1) for i in range(n_ports)]
    node.core_ports = list(node.phys_ports)
    node.port_pairs = {p: internal_port(p) for p in node.phys_ports}
    node.bootstrap(vll_multicast=vll)
    return node


def test_bootstrap_rule_count_three_ports():
    node = make_node(3, vll=True)
    assert len(node.table0) == 2 + 2 + 6
    assert len(node.table1) == 0


def test_bootstrap_rule_count_no_ports():
    node = make_node(0, vll=True)
    assert len(node.table0) == 4


def test_pw_only_bootstrap_has_no_multicast_rule():
    node = make_node(2, vll=False)
    assert len(node.table0) == 1 + 2 + 4
    ethertypes = {r.match.ethertype for r in node.table0.rules}
    assert 0x8848 not in ethertypes
    assert 0x8847 in ethertypes


def test_ip_frame_bridges_to_internal_port():
    node = make_node(2)
    f = ip_frame("a" * 17, "b" * 17, "10.0.0.1", "10.0.0.9")
    dests, cost = node.ofcs_process("1", f, CM)
    assert dests == [("ipEngine",)]
    assert cost == CM.c_ofcs_lookup


def test_internal_port_bridges_back_to_physical():
    node = make_node(2)
    f = ip_frame("a" * 17, "b" * 17, "10.0.0.1", "10.0.0.9")
    dests, _ = node.ofcs_process(internal_port("2"), f, CM)
    assert dests == [("port", "2")]


def test_lldp_and_bddp_punt_to_controller():
    node = make_node(1)
    for ethertype in (ETH_LLDP, ETH_BDDP):
        f = Frame(eth_src="a" * 17, eth_dst="b" * 17, ethertype=ethertype, payload=b"x")
        dests, _ = node.ofcs_process("1", f, CM)
        assert dests == [("controller", "1")]


def test_mpls_label_swap_rule():
    node = make_node(2)
    node.install_rule(1, 200, Match(in_port="1", mpls_label=17),
                      [set_mpls_label(42), output("2")])
    f = ip_frame("a" * 17, "b" * 17, "1.1.1.1", "2.2.2.2")
    f.push_mpls(17)
    dests, cost = node.ofcs_process("1", f, CM)
    assert dests == [("port", "2")]
    assert f.top_label() == 42
    assert f.mpls_stack[0].ttl == 254  # swap decrements
    assert cost == pytest.approx(CM.c_ofcs_lookup + CM.c_mpls_op)


def test_mpls_frame_without_sbp_rule_drops():
    node = make_node(2)
    f = ip_frame("a" * 17, "b" * 17, "1.1.1.1", "2.2.2.2")
    f.push_mpls(99)
    dests, _ = node.ofcs_process("1", f, CM)
    assert dests == [("drop", "NO_SBP_MATCH")]


def test_unmatched_frame_drops_no_rule():
    node = make_node(0)
    f = ip_frame("a" * 17, "b" * 17, "1.1.1.1", "2.2.2.2")
    dests, _ = node.ofcs_process("5", f, CM)
    assert dests == [("drop", "NO_RULE")]


def test_mpls_ttl_exhaustion_drops():
    node = make_node(2)
    node.install_rule(1, 200, Match(in_port="1", mpls_label=5),
                      [set_mpls_label(6), output("2")])
    f = ip_frame("a" * 17, "b" * 17, "1.1.1.1", "2.2.2.2")
    f.push_mpls(5, ttl=1)
    dests, _ = node.ofcs_process("1", f, CM)
    assert dests == [("drop", "MPLS_TTL_EXPIRED")]


def test_duplicate_match_rejected():
    node = make_node(1)
    node.install_rule(0, 200, Match(in_port="7"), [output("1")])
    with pytest.raises(RuleConflict):
        node.install_rule(0, 250, Match(in_port="7"), [output("1")])


def test_ethertype_guard_no_ip_frame_reaches_table1():
    """Frames with IP/ARP ethertypes never match a table-1 rule; MPLS frames
    never reach the IP engine."""
    net = Network(make_chain(n_core=1, vll=True))
    from hybridnet.controller import Controller
    Controller(net).provision_all()
    for node in net.nodes.values():
        if node.kind == "CustomerEdge":
            continue
        ipf = ip_frame("a" * 17, "b" * 17, "10.0.0.1", "10.0.0.2")
        arpf = arp_frame("a" * 17, "b" * 17)
        for frame in (ipf, arpf):
            for rule in node.table1.rules:
                assert not rule.match.matches(frame, rule.match.in_port), \
                    (node.node_id, rule.rule_id)
        mpls = ip_frame("a" * 17, "b" * 17, "10.0.0.1", "10.0.0.2")
        mpls.push_mpls(16)
        for port in node.phys_ports:
            dests, _ = node.ofcs_process(port, mpls.clone(), CM)
            assert ("ipEngine",) not in dests, node.node_id


def test_flow_cache_modes():
    node = make_node(2)
    node.install_rule(1, 200, Match(in_port="1", mpls_label=17),
                      [set_mpls_label(42), output("2")])

    def mpls_frame():
        f = ip_frame("a" * 17, "b" * 17, "1.1.1.1", "2.2.2.2")
        f.push_mpls(17)
        return f

    normal = CM.c_ofcs_lookup + CM.c_mpls_op
    # cache on: first packet misses, the rest hit
    costs = [node.ofcs_process("1", mpls_frame(), CM, cache_mode="on")[1]
             for _ in range(5)]
    assert costs[0] == CM.c_userspace_miss
    assert all(c == pytest.approx(normal) for c in costs[1:])
    # single-packet flows: every distinct key misses
    node2 = make_node(2)
    node2.install_rule(1, 200, Match(in_port="1", mpls_label=17),
                       [set_mpls_label(42), output("2")])
    for i in range(3):
        f = ip_frame("a" * 17, "b" * 17, "1.1.1.1", f"2.2.2.{i + 1}")
        f.push_mpls(17)
        cost = node2.ofcs_process("1", f, CM, cache_mode="on")[1]
        assert cost == CM.c_userspace_miss
    # cache off: every packet pays the userspace path
    costs = [node.ofcs_process("1", mpls_frame(), CM, cache_mode="off")[1]
             for _ in range(3)]
    assert all(c == CM.c_userspace_miss for c in costs)
