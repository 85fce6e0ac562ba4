"""Topology model: typed node/link/service graph, validation, JSON I/O, random generation.

The model is the single input format for every other subsystem: the packet
engine instantiates it, the controller provisions the services it declares,
and the deployment planner maps it onto VM pools.
"""

import random
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import InvalidArgument, SchemaError

SCHEMA_VERSION = 1

KIND_CR = "CoreRouter"
KIND_PE = "ProviderEdge"
KIND_CE = "CustomerEdge"
KIND_CTRL = "Controller"
NODE_KINDS = (KIND_CR, KIND_PE, KIND_CE, KIND_CTRL)

LINK_CORE = "core"
LINK_ACCESS = "access"
LINK_KINDS = (LINK_CORE, LINK_ACCESS)

SVC_VLL = "IpVll"
SVC_PW = "Pw"
SVC_VSS = "Vss"
SERVICE_KINDS = (SVC_VLL, SVC_PW, SVC_VSS)


@dataclass
class NodeSpec:
    id: str
    kind: str
    label: str = ""
    loopback: Optional[str] = None
    interface_macs: dict = field(default_factory=dict)


@dataclass
class LinkSpec:
    id: str
    a: tuple  # (node-id, port-id)
    b: tuple
    kind: str = LINK_CORE
    cost_metric: int = 1


@dataclass
class AccessEndpoint:
    pe: str
    port: str
    vlan: Optional[int] = None

    def claim(self):
        return (self.pe, self.port, self.vlan)


@dataclass
class ServiceSpec:
    id: str
    kind: str
    endpoints: list
    options: dict = field(default_factory=dict)


@dataclass
class TopologyModel:
    model_name: str = "model"
    nodes: list = field(default_factory=list)
    links: list = field(default_factory=list)
    controller_assignment: dict = field(default_factory=dict)
    services: list = field(default_factory=list)
    # Unknown top-level document keys are kept here and re-emitted untouched,
    # so external tools can attach extensions (e.g. canvas layout) safely.
    extensions: dict = field(default_factory=dict)

    def node(self, node_id):
        for n in self.nodes:
            if n.id == node_id:
                return n
        return None

    def nodes_of_kind(self, *kinds):
        return [n for n in self.nodes if n.kind in kinds]

    def oshi_nodes(self):
        """CR/PE nodes (the programmable data plane), sorted by id."""
        return sorted(self.nodes_of_kind(KIND_CR, KIND_PE), key=lambda n: n.id)

    def links_at(self, node_id):
        return [l for l in self.links if l.a[0] == node_id or l.b[0] == node_id]

    def link(self, link_id):
        for l in self.links:
            if l.id == link_id:
                return l
        return None

    def service(self, service_id):
        for s in self.services:
            if s.id == service_id:
                return s
        return None

    def access_ports(self, pe_id):
        """Ports of a PE that sit on access links, sorted."""
        ports = []
        for l in self.links:
            if l.kind != LINK_ACCESS:
                continue
            for end in (l.a, l.b):
                if end[0] == pe_id:
                    ports.append(end[1])
        return sorted(ports, key=_port_sort_key)


def _port_sort_key(port):
    return (len(port), port)


@dataclass
class ValidationReport:
    ok: bool
    violations: list  # of (code, subject-id, message)

    def codes(self):
        return {v[0] for v in self.violations}

    def to_doc(self):
        return {
            "ok": self.ok,
            "violations": [
                {"code": c, "subject": s, "message": m} for c, s, m in self.violations
            ],
        }


# Violation codes emitted by validate(); the UI mirrors these for inline checks.
V_DUPLICATE_NODE_ID = "DUPLICATE_NODE_ID"
V_BAD_NODE_KIND = "BAD_NODE_KIND"
V_DUPLICATE_LINK_ID = "DUPLICATE_LINK_ID"
V_DANGLING_LINK_ENDPOINT = "DANGLING_LINK_ENDPOINT"
V_DUPLICATE_PORT = "DUPLICATE_PORT"
V_BAD_LINK_KIND = "BAD_LINK_KIND"
V_ACCESS_LINK_NOT_PE = "ACCESS_LINK_NOT_PE"
V_CORE_LINK_BAD_ENDPOINT = "CORE_LINK_BAD_ENDPOINT"
V_CE_LINK_COUNT = "CE_LINK_COUNT"
V_CONTROLLER_HAS_LINKS = "CONTROLLER_HAS_LINKS"
V_BAD_COST_METRIC = "BAD_COST_METRIC"
V_CORE_DISCONNECTED = "CORE_DISCONNECTED"
V_MISSING_CONTROLLER_ASSIGNMENT = "MISSING_CONTROLLER_ASSIGNMENT"
V_BAD_ASSIGNMENT_SUBJECT = "BAD_ASSIGNMENT_SUBJECT"
V_BAD_CONTROLLER_REF = "BAD_CONTROLLER_REF"
V_DUPLICATE_SERVICE_ID = "DUPLICATE_SERVICE_ID"
V_BAD_SERVICE_KIND = "BAD_SERVICE_KIND"
V_SERVICE_ENDPOINT_COUNT = "SERVICE_ENDPOINT_COUNT"
V_ENDPOINT_UNKNOWN_NODE = "ENDPOINT_UNKNOWN_NODE"
V_ENDPOINT_NOT_ACCESS_PORT = "ENDPOINT_NOT_ACCESS_PORT"
V_BAD_VLAN = "BAD_VLAN"
V_DUPLICATE_ENDPOINT_CLAIM = "DUPLICATE_ENDPOINT_CLAIM"


def validate(topology: TopologyModel) -> ValidationReport:
    """Check every model invariant; violations are data, not exceptions."""
    v = []
    seen_nodes = {}
    for n in topology.nodes:
        if n.id in seen_nodes:
            v.append((V_DUPLICATE_NODE_ID, n.id, f"node id {n.id!r} repeated"))
        seen_nodes[n.id] = n
        if n.kind not in NODE_KINDS:
            v.append((V_BAD_NODE_KIND, n.id, f"unknown node kind {n.kind!r}"))

    by_id = {n.id: n for n in topology.nodes}

    seen_links = set()
    seen_ports = {}
    link_count = {n.id: 0 for n in topology.nodes}
    for l in topology.links:
        if l.id in seen_links:
            v.append((V_DUPLICATE_LINK_ID, l.id, f"link id {l.id!r} repeated"))
        seen_links.add(l.id)
        if l.kind not in LINK_KINDS:
            v.append((V_BAD_LINK_KIND, l.id, f"unknown link kind {l.kind!r}"))
        if not isinstance(l.cost_metric, int) or l.cost_metric < 1:
            v.append((V_BAD_COST_METRIC, l.id, f"costMetric must be a positive integer"))
        ends = []
        for end in (l.a, l.b):
            node_id, port = end
            if node_id not in by_id:
                v.append((V_DANGLING_LINK_ENDPOINT, l.id, f"link references unknown node {node_id!r}"))
                continue
            if end in seen_ports:
                v.append((V_DUPLICATE_PORT, l.id,
                          f"port {port!r} of node {node_id!r} already used by link {seen_ports[end]!r}"))
            seen_ports[end] = l.id
            link_count[node_id] += 1
            ends.append(by_id[node_id])
        if len(ends) != 2:
            continue
        kinds = {e.kind for e in ends}
        if l.kind == LINK_ACCESS:
            if kinds != {KIND_CE, KIND_PE}:
                v.append((V_ACCESS_LINK_NOT_PE, l.id,
                          "access link must connect one CustomerEdge and one ProviderEdge"))
        else:
            if not kinds <= {KIND_CR, KIND_PE}:
                v.append((V_CORE_LINK_BAD_ENDPOINT, l.id,
                          "core link may only connect CoreRouter/ProviderEdge nodes"))
        # A CE on any non-access link is always a modelling error.
        if l.kind != LINK_ACCESS and KIND_CE in kinds:
            v.append((V_ACCESS_LINK_NOT_PE, l.id, "CustomerEdge may only sit on access links"))

    for n in topology.nodes:
        if n.kind == KIND_CE and link_count.get(n.id, 0) != 1:
            v.append((V_CE_LINK_COUNT, n.id,
                      f"CustomerEdge must have exactly one link, has {link_count.get(n.id, 0)}"))
        if n.kind == KIND_CTRL and link_count.get(n.id, 0) != 0:
            v.append((V_CONTROLLER_HAS_LINKS, n.id, "Controller must have zero data-plane links"))

    # Core connectivity over CR/PE nodes only.
    core_ids = sorted({n.id for n in topology.nodes if n.kind in (KIND_CR, KIND_PE)})
    if core_ids:
        adj = {i: set() for i in core_ids}
        for l in topology.links:
            a, b = l.a[0], l.b[0]
            if a in adj and b in adj:
                adj[a].add(b)
                adj[b].add(a)
        seen = set()
        stack = [sorted(core_ids)[0]]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(adj[cur] - seen)
        if len(seen) != len(core_ids):
            missing = sorted(set(core_ids) - seen)
            v.append((V_CORE_DISCONNECTED, missing[0],
                      f"core graph is disconnected; {len(missing)} node(s) unreachable"))

    controller_nodes = {n.id for n in topology.nodes if n.kind == KIND_CTRL}
    for node_id in core_ids:
        if node_id not in topology.controller_assignment:
            v.append((V_MISSING_CONTROLLER_ASSIGNMENT, node_id,
                      f"node {node_id!r} has no controller assigned"))
    for node_id, ctrl in topology.controller_assignment.items():
        if node_id not in by_id or by_id[node_id].kind not in (KIND_CR, KIND_PE):
            v.append((V_BAD_ASSIGNMENT_SUBJECT, node_id,
                      "controller assignment subject must be an existing CR/PE node"))
        # Controller ids are symbolic unless Controller nodes are modelled,
        # in which case assignments must reference one of them.
        if controller_nodes and ctrl not in controller_nodes:
            v.append((V_BAD_CONTROLLER_REF, node_id,
                      f"assignment references {ctrl!r} which is not a Controller node"))

    access_by_pe = {}
    for l in topology.links:
        if l.kind != LINK_ACCESS:
            continue
        for end in (l.a, l.b):
            if end[0] in by_id and by_id[end[0]].kind == KIND_PE:
                access_by_pe.setdefault(end[0], set()).add(end[1])

    seen_services = set()
    claims = {}
    for s in topology.services:
        if s.id in seen_services:
            v.append((V_DUPLICATE_SERVICE_ID, s.id, f"service id {s.id!r} repeated"))
        seen_services.add(s.id)
        if s.kind not in SERVICE_KINDS:
            v.append((V_BAD_SERVICE_KIND, s.id, f"unknown service kind {s.kind!r}"))
            continue
        n_ep = len(s.endpoints)
        if s.kind in (SVC_VLL, SVC_PW) and n_ep != 2:
            v.append((V_SERVICE_ENDPOINT_COUNT, s.id,
                      f"{s.kind} needs exactly 2 endpoints, has {n_ep}"))
        if s.kind == SVC_VSS and n_ep < 2:
            v.append((V_SERVICE_ENDPOINT_COUNT, s.id,
                      f"Vss needs at least 2 endpoints, has {n_ep}"))
        for ep in s.endpoints:
            if ep.pe not in by_id or by_id[ep.pe].kind != KIND_PE:
                v.append((V_ENDPOINT_UNKNOWN_NODE, s.id,
                          f"endpoint references {ep.pe!r} which is not a ProviderEdge"))
                continue
            if ep.port not in access_by_pe.get(ep.pe, set()):
                v.append((V_ENDPOINT_NOT_ACCESS_PORT, s.id,
                          f"endpoint port {ep.port!r} of {ep.pe!r} is not an access port"))
            if ep.vlan is not None and not (1 <= ep.vlan <= 4094):
                v.append((V_BAD_VLAN, s.id, f"vlan {ep.vlan!r} outside 1-4094"))
            key = ep.claim()
            if key in claims and claims[key] != s.id:
                v.append((V_DUPLICATE_ENDPOINT_CLAIM, s.id,
                          f"endpoint {key} already claimed by service {claims[key]!r}"))
            claims.setdefault(key, s.id)

    return ValidationReport(ok=not v, violations=v)


# --- JSON document form -----------------------------------------------------

_TOP_KEYS = {"schemaVersion", "modelName", "nodes", "links", "controllerAssignment", "services"}


def export_json(topology: TopologyModel) -> dict:
    doc = {
        "schemaVersion": SCHEMA_VERSION,
        "modelName": topology.model_name,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind,
                "label": n.label,
                "loopback": n.loopback,
                "interfaceMacs": dict(sorted(n.interface_macs.items())),
            }
            for n in topology.nodes
        ],
        "links": [
            {
                "id": l.id,
                "a": {"node": l.a[0], "port": l.a[1]},
                "b": {"node": l.b[0], "port": l.b[1]},
                "kind": l.kind,
                "costMetric": l.cost_metric,
            }
            for l in topology.links
        ],
        "controllerAssignment": dict(sorted(topology.controller_assignment.items())),
        "services": [
            {
                "id": s.id,
                "kind": s.kind,
                "endpoints": [
                    {"pe": e.pe, "port": e.port, "vlan": e.vlan} for e in s.endpoints
                ],
                "options": s.options,
            }
            for s in topology.services
        ],
    }
    doc.update(topology.extensions)
    return doc


def _expect(doc, key, types, path):
    if key not in doc:
        raise SchemaError(f"missing required key {key!r}", subject=f"{path}/{key}")
    val = doc[key]
    if not isinstance(val, types):
        raise SchemaError(f"wrong type for {key!r}", subject=f"{path}/{key}")
    return val


def _end_from(doc, path):
    if not isinstance(doc, dict):
        raise SchemaError("link endpoint must be an object", subject=path)
    node = _expect(doc, "node", str, path)
    port = _expect(doc, "port", str, path)
    return (node, port)


def import_json(doc) -> TopologyModel:
    """Parse a topology document; schema errors name the offending path."""
    if not isinstance(doc, dict):
        raise SchemaError("topology document must be an object", subject="/")
    version = _expect(doc, "schemaVersion", int, "")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schemaVersion {version}", subject="/schemaVersion")
    model_name = _expect(doc, "modelName", str, "")
    nodes_doc = _expect(doc, "nodes", list, "")
    links_doc = _expect(doc, "links", list, "")
    assign_doc = _expect(doc, "controllerAssignment", dict, "")
    services_doc = _expect(doc, "services", list, "")

    nodes = []
    for i, nd in enumerate(nodes_doc):
        path = f"/nodes/{i}"
        if not isinstance(nd, dict):
            raise SchemaError("node must be an object", subject=path)
        loopback = nd.get("loopback")
        if loopback is not None and not isinstance(loopback, str):
            raise SchemaError("loopback must be a string", subject=f"{path}/loopback")
        macs = nd.get("interfaceMacs", {})
        if not isinstance(macs, dict):
            raise SchemaError("interfaceMacs must be an object", subject=f"{path}/interfaceMacs")
        nodes.append(NodeSpec(
            id=_expect(nd, "id", str, path),
            kind=_expect(nd, "kind", str, path),
            label=nd.get("label", ""),
            loopback=loopback,
            interface_macs=dict(macs),
        ))

    links = []
    for i, ld in enumerate(links_doc):
        path = f"/links/{i}"
        if not isinstance(ld, dict):
            raise SchemaError("link must be an object", subject=path)
        cost = ld.get("costMetric", 1)
        if not isinstance(cost, int) or isinstance(cost, bool):
            raise SchemaError("costMetric must be an integer", subject=f"{path}/costMetric")
        links.append(LinkSpec(
            id=_expect(ld, "id", str, path),
            a=_end_from(_expect(ld, "a", dict, path), f"{path}/a"),
            b=_end_from(_expect(ld, "b", dict, path), f"{path}/b"),
            kind=ld.get("kind", LINK_CORE),
            cost_metric=cost,
        ))

    for key, val in assign_doc.items():
        if not isinstance(val, str):
            raise SchemaError("controller id must be a string",
                              subject=f"/controllerAssignment/{key}")

    services = []
    for i, sd in enumerate(services_doc):
        path = f"/services/{i}"
        if not isinstance(sd, dict):
            raise SchemaError("service must be an object", subject=path)
        eps_doc = _expect(sd, "endpoints", list, path)
        endpoints = []
        for j, ed in enumerate(eps_doc):
            ep_path = f"{path}/endpoints/{j}"
            if not isinstance(ed, dict):
                raise SchemaError("endpoint must be an object", subject=ep_path)
            vlan = ed.get("vlan")
            if vlan is not None and (not isinstance(vlan, int) or isinstance(vlan, bool)):
                raise SchemaError("vlan must be an integer", subject=f"{ep_path}/vlan")
            endpoints.append(AccessEndpoint(
                pe=_expect(ed, "pe", str, ep_path),
                port=_expect(ed, "port", str, ep_path),
                vlan=vlan,
            ))
        options = sd.get("options", {})
        if not isinstance(options, dict):
            raise SchemaError("options must be an object", subject=f"{path}/options")
        services.append(ServiceSpec(
            id=_expect(sd, "id", str, path),
            kind=_expect(sd, "kind", str, path),
            endpoints=endpoints,
            options=options,
        ))

    extensions = {k: doc[k] for k in doc if k not in _TOP_KEYS}
    return TopologyModel(
        model_name=model_name,
        nodes=nodes,
        links=links,
        controller_assignment=dict(assign_doc),
        services=services,
        extensions=extensions,
    )


# --- Random generation ------------------------------------------------------

def generate_random(n_core, n_pe, n_ce_per_pe, extra_edge_prob, seed) -> TopologyModel:
    """Seeded random topology: a spanning tree over CR/PE plus extra edges,
    n_ce_per_pe customer edges per PE, and one controller assigned everywhere.
    """
    if n_core < 1 or n_pe < 1:
        raise InvalidArgument("need at least one CoreRouter and one ProviderEdge",
                              subject="counts")
    if n_ce_per_pe < 0:
        raise InvalidArgument("nCePerPe must be >= 0", subject="counts")
    if not (0.0 <= extra_edge_prob <= 1.0):
        raise InvalidArgument("extraEdgeProb must be within [0, 1]", subject="counts")

    rng = random.Random(seed)
    core_ids = [f"cr{i + 1}" for i in range(n_core)] + [f"pe{i + 1}" for i in range(n_pe)]
    nodes = [NodeSpec(id=i, kind=KIND_CR, label=i) for i in core_ids[:n_core]]
    nodes += [NodeSpec(id=i, kind=KIND_PE, label=i) for i in core_ids[n_core:]]

    next_port = {i: 1 for i in core_ids}

    def take_port(node_id):
        p = str(next_port[node_id])
        next_port[node_id] += 1
        return p

    links = []
    order = core_ids[:]
    rng.shuffle(order)
    link_seq = 1
    for i in range(1, len(order)):
        peer = order[rng.randrange(i)]
        links.append(LinkSpec(
            id=f"l{link_seq}",
            a=(order[i], take_port(order[i])),
            b=(peer, take_port(peer)),
            kind=LINK_CORE,
        ))
        link_seq += 1

    tree_pairs = {frozenset((l.a[0], l.b[0])) for l in links}
    for x in range(len(core_ids)):
        for y in range(x + 1, len(core_ids)):
            pair = frozenset((core_ids[x], core_ids[y]))
            if pair in tree_pairs:
                continue
            if rng.random() < extra_edge_prob:
                links.append(LinkSpec(
                    id=f"l{link_seq}",
                    a=(core_ids[x], take_port(core_ids[x])),
                    b=(core_ids[y], take_port(core_ids[y])),
                    kind=LINK_CORE,
                ))
                link_seq += 1

    for p in range(n_pe):
        pe_id = f"pe{p + 1}"
        for c in range(n_ce_per_pe):
            ce_id = f"ce{p + 1}_{c + 1}"
            nodes.append(NodeSpec(id=ce_id, kind=KIND_CE, label=ce_id))
            links.append(LinkSpec(
                id=f"l{link_seq}",
                a=(pe_id, take_port(pe_id)),
                b=(ce_id, "1"),
                kind=LINK_ACCESS,
            ))
            link_seq += 1

    assignment = {i: "ctrl1" for i in core_ids}
    return TopologyModel(
        model_name=f"random-{n_core}x{n_pe}x{n_ce_per_pe}-{seed}",
        nodes=nodes,
        links=links,
        controller_assignment=assignment,
        services=[],
    )
