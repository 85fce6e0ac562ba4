"""Topology model: validation rules, JSON round-trip, random generation."""

import copy
import json

import pytest

from conftest import make_chain
from hybridnet.errors import InvalidArgument, SchemaError
from hybridnet.jsonutil import canonical_json
from hybridnet.topo import (AccessEndpoint, LinkSpec, NodeSpec, ServiceSpec,
                            TopologyModel, export_json, generate_random,
                            import_json, validate)


def test_empty_topology_is_valid():
    report = validate(TopologyModel(model_name="empty"))
    assert report.ok
    assert report.violations == []


def test_chain_fixture_with_vll_is_valid(chain):
    report = validate(chain)
    assert report.ok, report.violations


def test_ce_linked_to_cr_flags_access_link():
    t = TopologyModel(nodes=[
        NodeSpec(id="cr1", kind="CoreRouter"),
        NodeSpec(id="ce1", kind="CustomerEdge"),
    ], links=[LinkSpec(id="l1", a=("cr1", "1"), b=("ce1", "1"), kind="access")],
        controller_assignment={"cr1": "c1"})
    report = validate(t)
    assert not report.ok
    assert "ACCESS_LINK_NOT_PE" in report.codes()


def test_ce_on_core_link_also_flagged():
    t = TopologyModel(nodes=[
        NodeSpec(id="cr1", kind="CoreRouter"),
        NodeSpec(id="ce1", kind="CustomerEdge"),
    ], links=[LinkSpec(id="l1", a=("cr1", "1"), b=("ce1", "1"), kind="core")],
        controller_assignment={"cr1": "c1"})
    codes = validate(t).codes()
    assert "ACCESS_LINK_NOT_PE" in codes
    assert "CORE_LINK_BAD_ENDPOINT" in codes


def test_validator_reports_each_broken_rule(chain):
    # one rule-breaking edit at a time; every mutation must be caught
    mutations = []

    def mut(fn, code):
        mutations.append((fn, code))

    mut(lambda t: t.nodes.append(NodeSpec(id="pe1", kind="ProviderEdge")),
        "DUPLICATE_NODE_ID")
    mut(lambda t: t.nodes.append(NodeSpec(id="x", kind="Blackhole")), "BAD_NODE_KIND")
    mut(lambda t: t.links.append(LinkSpec(id="l1", a=("pe1", "9"), b=("cr1", "9"))),
        "DUPLICATE_LINK_ID")
    mut(lambda t: t.links.append(LinkSpec(id="lx", a=("ghost", "1"), b=("cr1", "9"))),
        "DANGLING_LINK_ENDPOINT")
    mut(lambda t: t.links.append(LinkSpec(id="lx", a=("pe1", "1"), b=("cr1", "9"))),
        "DUPLICATE_PORT")
    mut(lambda t: setattr(t.links[0], "cost_metric", 0), "BAD_COST_METRIC")
    mut(lambda t: t.links.pop(0), "CORE_DISCONNECTED")
    mut(lambda t: t.controller_assignment.pop("pe1"), "MISSING_CONTROLLER_ASSIGNMENT")
    mut(lambda t: t.controller_assignment.update({"ce1": "ctrl1"}),
        "BAD_ASSIGNMENT_SUBJECT")
    mut(lambda t: t.services.append(
        ServiceSpec(id="v1", kind="IpVll",
                    endpoints=[AccessEndpoint("pe1", "2"), AccessEndpoint("pe2", "2")])),
        "DUPLICATE_SERVICE_ID")
    mut(lambda t: t.services.append(
        ServiceSpec(id="s2", kind="Magic", endpoints=[])), "BAD_SERVICE_KIND")
    mut(lambda t: t.services[0].endpoints.pop(), "SERVICE_ENDPOINT_COUNT")
    mut(lambda t: setattr(t.services[0].endpoints[0], "pe", "cr1"),
        "ENDPOINT_UNKNOWN_NODE")
    mut(lambda t: setattr(t.services[0].endpoints[0], "port", "1"),
        "ENDPOINT_NOT_ACCESS_PORT")
    mut(lambda t: setattr(t.services[0].endpoints[0], "vlan", 5000), "BAD_VLAN")
    mut(lambda t: t.services.append(
        ServiceSpec(id="s2", kind="Pw",
                    endpoints=[AccessEndpoint("pe1", "2"), AccessEndpoint("pe2", "2")])),
        "DUPLICATE_ENDPOINT_CLAIM")

    for fn, code in mutations:
        t = copy.deepcopy(make_chain(n_core=1, vll=True))
        fn(t)
        report = validate(t)
        assert not report.ok, code
        assert code in report.codes(), (code, report.violations)


def test_controller_node_with_links_flagged(chain):
    chain.nodes.append(NodeSpec(id="ctrl1", kind="Controller"))
    chain.links.append(LinkSpec(id="lc", a=("ctrl1", "1"), b=("cr1", "9"), kind="core"))
    codes = validate(chain).codes()
    assert "CONTROLLER_HAS_LINKS" in codes


def test_assignment_must_reference_modelled_controller_when_present(chain):
    chain.nodes.append(NodeSpec(id="ctrlA", kind="Controller"))
    codes = validate(chain).codes()  # assignment says "ctrl1", node is "ctrlA"
    assert "BAD_CONTROLLER_REF" in codes
    chain.controller_assignment = {k: "ctrlA" for k in chain.controller_assignment}
    assert validate(chain).ok


def test_ce_must_have_exactly_one_link(chain):
    chain.links.append(LinkSpec(id="lx", a=("pe1", "9"), b=("ce1", "2"), kind="access"))
    assert "CE_LINK_COUNT" in validate(chain).codes()


def test_tagged_claims_coexist_on_one_port(chain):
    chain.services.append(ServiceSpec(id="s2", kind="Pw", endpoints=[
        AccessEndpoint("pe1", "2", vlan=10), AccessEndpoint("pe2", "2", vlan=10)]))
    chain.services.append(ServiceSpec(id="s3", kind="Pw", endpoints=[
        AccessEndpoint("pe1", "2", vlan=20), AccessEndpoint("pe2", "2", vlan=20)]))
    assert validate(chain).ok


# --- JSON round-trip ---------------------------------------------------------


def test_round_trip_identity(chain):
    doc = export_json(chain)
    again = import_json(doc)
    assert again == chain
    assert export_json(again) == doc


def test_round_trip_preserves_extension_keys(chain):
    doc = export_json(chain)
    doc["layout"] = {"pe1": {"x": 10, "y": 20}}
    model = import_json(doc)
    assert model.extensions == {"layout": {"pe1": {"x": 10, "y": 20}}}
    assert export_json(model)["layout"] == {"pe1": {"x": 10, "y": 20}}


def test_missing_nodes_key_names_path():
    doc = export_json(make_chain())
    del doc["nodes"]
    with pytest.raises(SchemaError) as err:
        import_json(doc)
    assert err.value.subject == "/nodes"


def test_field_order_is_irrelevant(chain):
    doc = export_json(chain)
    shuffled = json.loads(json.dumps(doc, sort_keys=True))
    reordered = {k: shuffled[k] for k in reversed(list(shuffled))}
    assert import_json(reordered) == chain


def test_bad_schema_version():
    doc = export_json(make_chain())
    doc["schemaVersion"] = 99
    with pytest.raises(SchemaError) as err:
        import_json(doc)
    assert err.value.subject == "/schemaVersion"


def test_bad_endpoint_path_in_error():
    doc = export_json(make_chain(vll=True))
    del doc["services"][0]["endpoints"][1]["pe"]
    with pytest.raises(SchemaError) as err:
        import_json(doc)
    assert err.value.subject == "/services/0/endpoints/1/pe"


# --- Random generation ---------------------------------------------------------


def test_generate_minimal_counts():
    t = generate_random(1, 2, 1, 0.0, 99)
    kinds = {}
    for n in t.nodes:
        kinds[n.kind] = kinds.get(n.kind, 0) + 1
    assert kinds == {"CoreRouter": 1, "ProviderEdge": 2, "CustomerEdge": 2}
    assert len(t.nodes) == 5
    core_links = [l for l in t.links if l.kind == "core"]
    assert len(core_links) == 2  # spanning tree over 3 core nodes
    assert set(t.controller_assignment) == {"cr1", "pe1", "pe2"}


def test_generate_deterministic_bytes():
    a = canonical_json(export_json(generate_random(3, 4, 2, 0.4, 1234)))
    b = canonical_json(export_json(generate_random(3, 4, 2, 0.4, 1234)))
    assert a == b
    c = canonical_json(export_json(generate_random(3, 4, 2, 0.4, 1235)))
    assert a != c


def test_generated_topologies_validate():
    t = generate_random(4, 4, 1, 0.3, 7)
    assert validate(t).ok
    for seed in range(20):
        t = generate_random(1 + seed % 5, 1 + (seed * 3) % 6, seed % 3,
                            (seed % 10) / 10.0, seed)
        assert validate(t).ok, seed


def test_generate_rejects_bad_counts():
    with pytest.raises(InvalidArgument):
        generate_random(0, 2, 1, 0.0, 1)
    with pytest.raises(InvalidArgument):
        generate_random(1, 0, 1, 0.0, 1)
    with pytest.raises(InvalidArgument):
        generate_random(1, 1, 1, 1.5, 1)
