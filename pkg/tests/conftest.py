"""Shared topology builders for the test suite."""

import pytest

from hybridnet.topo import (AccessEndpoint, LinkSpec, NodeSpec, ServiceSpec,
                            TopologyModel)


def make_chain(n_core=1, vll=False, pw=False):
    """ce1 - pe1 - cr... - pe2 - ce2 chain with optional services on the two
    access ports."""
    nodes = [
        NodeSpec(id="pe1", kind="ProviderEdge", label="pe1"),
        NodeSpec(id="pe2", kind="ProviderEdge", label="pe2"),
        NodeSpec(id="ce1", kind="CustomerEdge", label="ce1"),
        NodeSpec(id="ce2", kind="CustomerEdge", label="ce2"),
    ]
    links = []
    prev, prev_port = "pe1", "1"
    for i in range(n_core):
        cr = f"cr{i + 1}"
        nodes.append(NodeSpec(id=cr, kind="CoreRouter", label=cr))
        links.append(LinkSpec(id=f"l{len(links) + 1}", a=(prev, prev_port),
                              b=(cr, "1"), kind="core"))
        prev, prev_port = cr, "2"
    links.append(LinkSpec(id=f"l{len(links) + 1}", a=(prev, prev_port),
                          b=("pe2", "1"), kind="core"))
    links.append(LinkSpec(id=f"l{len(links) + 1}", a=("pe1", "2"),
                          b=("ce1", "1"), kind="access"))
    links.append(LinkSpec(id=f"l{len(links) + 1}", a=("pe2", "2"),
                          b=("ce2", "1"), kind="access"))
    services = []
    if vll:
        services.append(ServiceSpec(id="v1", kind="IpVll", endpoints=[
            AccessEndpoint(pe="pe1", port="2"), AccessEndpoint(pe="pe2", port="2")]))
    if pw:
        services.append(ServiceSpec(id="p1", kind="Pw", endpoints=[
            AccessEndpoint(pe="pe1", port="2"), AccessEndpoint(pe="pe2", port="2")]))
    assignment = {n.id: "ctrl1" for n in nodes if n.kind in ("CoreRouter", "ProviderEdge")}
    return TopologyModel(model_name="chain", nodes=nodes, links=links,
                         controller_assignment=assignment, services=services)


def make_grid(side=4):
    """side x side grid of core routers, unit weights."""
    nodes = []
    links = []
    def name(r, c):
        return f"n{r}{c}"
    for r in range(side):
        for c in range(side):
            kind = "ProviderEdge" if (r, c) in ((0, 0), (side - 1, side - 1)) \
                else "CoreRouter"
            nodes.append(NodeSpec(id=name(r, c), kind=kind, label=name(r, c)))
    ports = {n.id: 0 for n in nodes}
    def take(nid):
        ports[nid] += 1
        return str(ports[nid])
    seq = 0
    for r in range(side):
        for c in range(side):
            if c + 1 < side:
                seq += 1
                links.append(LinkSpec(id=f"l{seq:02d}", a=(name(r, c), take(name(r, c))),
                                      b=(name(r, c + 1), take(name(r, c + 1))), kind="core"))
            if r + 1 < side:
                seq += 1
                links.append(LinkSpec(id=f"l{seq:02d}", a=(name(r, c), take(name(r, c))),
                                      b=(name(r + 1, c), take(name(r + 1, c))), kind="core"))
    assignment = {n.id: "ctrl1" for n in nodes}
    return TopologyModel(model_name="grid", nodes=nodes, links=links,
                         controller_assignment=assignment, services=[])


def make_triangle(w_ab=1, w_bc=1, w_ac=3):
    nodes = [NodeSpec(id=i, kind="CoreRouter", label=i) for i in ("a", "b", "c")]
    links = [
        LinkSpec(id="l1", a=("a", "1"), b=("b", "1"), kind="core", cost_metric=w_ab),
        LinkSpec(id="l2", a=("b", "2"), b=("c", "1"), kind="core", cost_metric=w_bc),
        LinkSpec(id="l3", a=("a", "2"), b=("c", "2"), kind="core", cost_metric=w_ac),
    ]
    assignment = {i: "ctrl1" for i in ("a", "b", "c")}
    return TopologyModel(model_name="triangle", nodes=nodes, links=links,
                         controller_assignment=assignment, services=[])


def make_ring(n=5):
    nodes = [NodeSpec(id=f"r{i + 1}", kind="CoreRouter", label=f"r{i + 1}")
             for i in range(n)]
    links = []
    for i in range(n):
        a, b = f"r{i + 1}", f"r{(i + 1) % n + 1}"
        links.append(LinkSpec(id=f"l{i + 1}", a=(a, "1" if i else "1"),
                              b=(b, "2"), kind="core"))
    # ports must be unique per node: ring uses port 1 clockwise, port 2 counter
    for i, l in enumerate(links):
        l.a = (l.a[0], "1")
        l.b = (l.b[0], "2")
    assignment = {n_.id: "ctrl1" for n_ in nodes}
    return TopologyModel(model_name="ring", nodes=nodes, links=links,
                         controller_assignment=assignment, services=[])


@pytest.fixture
def chain():
    return make_chain(n_core=1, vll=True)
