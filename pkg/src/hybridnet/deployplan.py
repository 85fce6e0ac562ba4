"""Deployment planning: node-to-VM mapping, point-to-point tunnel overlay with
one VNI per emulated link, per-node configuration documents, and tunneling
overhead accounting.

Configurations are structured directive lists rather than shell scripts; the
emulator consumes them directly and an adapter could render them for real VMs.
"""

from dataclasses import dataclass, field

from .addressing import AddressPlan
from .errors import InsufficientVms, InvalidArgument, SchemaError
from .jsonutil import canonical_json
from .topo import KIND_CE, KIND_CR, KIND_CTRL, KIND_PE

TUNNEL_KINDS = ("vxlan", "userspace")

# Per-packet transport overhead in bytes.
OVERHEAD = {
    # outer Ethernet 14 + IP 20 + UDP 8 + VXLAN 8
    "vxlan": 50,
    # pseudowire GRE transport beyond the EoMPLS reference: P-IP 20 + GRE 4
    "pw-gre": 24,
    # EoMPLS reference encapsulation: provider Ethernet 14 + one MPLS entry 4
    "eompls-reference": 18,
}


def overhead_of(kind):
    if kind not in OVERHEAD:
        raise InvalidArgument(f"unknown overhead kind {kind!r}", subject=kind)
    return OVERHEAD[kind]


@dataclass
class ResourcePool:
    vms: list  # of {"vmId", "mgmtAddress", "server"}

    @classmethod
    def from_doc(cls, doc):
        if isinstance(doc, dict):
            doc = doc.get("vms")
        if not isinstance(doc, list):
            raise SchemaError("resource file must hold a list of VMs", subject="/")
        vms = []
        ids, addrs = set(), set()
        for i, vm in enumerate(doc):
            if not isinstance(vm, dict) or "vmId" not in vm or "mgmtAddress" not in vm:
                raise SchemaError("VM entries need vmId and mgmtAddress",
                                  subject=f"/{i}")
            if vm["vmId"] in ids:
                raise SchemaError(f"duplicate vmId {vm['vmId']!r}", subject=f"/{i}/vmId")
            if vm["mgmtAddress"] in addrs:
                raise SchemaError(f"duplicate mgmtAddress {vm['mgmtAddress']!r}",
                                  subject=f"/{i}/mgmtAddress")
            ids.add(vm["vmId"])
            addrs.add(vm["mgmtAddress"])
            vms.append({"vmId": vm["vmId"], "mgmtAddress": vm["mgmtAddress"],
                        "server": vm.get("server", "")})
        return cls(vms=vms)

    @classmethod
    def synthetic(cls, size):
        return cls(vms=[{"vmId": f"vm{i + 1}", "mgmtAddress": f"192.168.100.{i + 1}",
                         "server": f"server{(i % 4) + 1}"} for i in range(size)])


def map_nodes(topology, pool: ResourcePool, overrides=None):
    """Assign every emulated node to a VM: overrides first, then remaining
    nodes in id order onto free VMs in id order."""
    overrides = overrides or {}
    vm_ids = [vm["vmId"] for vm in pool.vms]
    known = set(vm_ids)
    node_ids = sorted(n.id for n in topology.nodes)
    if len(node_ids) > len(vm_ids):
        raise InsufficientVms(
            f"{len(node_ids)} nodes but only {len(vm_ids)} VMs", subject="pool")
    mapping = {}
    used = set()
    for node_id, vm_id in sorted(overrides.items()):
        if node_id not in node_ids:
            raise InvalidArgument(f"override for unknown node {node_id!r}", subject=node_id)
        if vm_id not in known:
            raise InvalidArgument(f"override references unknown VM {vm_id!r}", subject=node_id)
        if vm_id in used:
            raise InvalidArgument(f"VM {vm_id!r} assigned twice", subject=node_id)
        mapping[node_id] = vm_id
        used.add(vm_id)
    free = [v for v in sorted(vm_ids) if v not in used]
    for node_id in node_ids:
        if node_id in mapping:
            continue
        mapping[node_id] = free.pop(0)
    return mapping


def plan_overlay(topology, mapping, kind="vxlan"):
    """One point-to-point tunnel per data-plane link; VNIs assigned 1,2,3,...
    in link-id order. No underlay multicast is assumed."""
    if kind not in TUNNEL_KINDS:
        raise InvalidArgument(f"unknown tunnel kind {kind!r}", subject=kind)
    tunnels = []
    for vni, link in enumerate(sorted(topology.links, key=lambda l: l.id), start=1):
        for end in (link.a, link.b):
            if end[0] not in mapping:
                raise InvalidArgument(f"link {link.id!r} endpoint {end[0]!r} is unmapped",
                                      subject=link.id)
        tunnels.append({
            "linkId": link.id,
            "vni": vni,
            "endpoints": [mapping[link.a[0]], mapping[link.b[0]]],
            "kind": kind,
        })
    return tunnels


@dataclass
class DeploymentPlan:
    mapping: dict
    tunnels: list
    node_configs: dict
    overhead_bytes_per_packet: dict = field(default_factory=lambda: dict(OVERHEAD))

    def to_doc(self):
        return {
            "mapping": dict(sorted(self.mapping.items())),
            "tunnels": self.tunnels,
            "nodeConfigs": {n: self.node_configs[n] for n in sorted(self.node_configs)},
            "overheadBytesPerPacket": dict(sorted(self.overhead_bytes_per_packet.items())),
        }

    def to_json(self):
        return canonical_json(self.to_doc())


_ROLE = {KIND_CR: "core-router", KIND_PE: "provider-edge",
         KIND_CE: "customer-edge", KIND_CTRL: "controller"}


def emit_configs(topology, mapping, tunnels):
    """Per-node setup/config directive documents; regeneration from the same
    inputs is byte-identical."""
    plan = AddressPlan(topology)
    tunnels_by_link = {t["linkId"]: t for t in tunnels}
    configs = {}
    for node in sorted(topology.nodes, key=lambda n: n.id):
        setup = [{"directive": "install-role", "role": _ROLE[node.kind]}]
        config = [{"directive": "set-loopback",
                   "address": f"{plan.loopback[node.id]}/32"}]
        for link in sorted(topology.links, key=lambda l: l.id):
            for end, peer in ((link.a, link.b), (link.b, link.a)):
                if end[0] != node.id:
                    continue
                tunnel = tunnels_by_link[link.id]
                config.append({
                    "directive": "attach-tunnel",
                    "port": end[1],
                    "linkId": link.id,
                    "vni": tunnel["vni"],
                    "kind": tunnel["kind"],
                    "peerVm": [vm for vm in tunnel["endpoints"]
                               if vm != mapping[node.id]][0]
                    if tunnel["endpoints"][0] != tunnel["endpoints"][1]
                    else tunnel["endpoints"][0],
                })
                config.append({
                    "directive": "set-interface-address",
                    "port": end[1],
                    "address": f"{plan.if_addr[(node.id, end[1])]}/30",
                    "mac": plan.port_mac[(node.id, end[1])],
                })
        if node.kind in (KIND_CR, KIND_PE):
            config.append({"directive": "install-bootstrap-rules",
                           "vllMulticast": True})
            config.append({"directive": "enable-routing", "protocol": "spf"})
        if node.kind == KIND_CE:
            config.append({"directive": "enable-routing", "protocol": "static-default"})
        if node.kind == KIND_CTRL:
            config.append({"directive": "listen",
                           "address": plan.loopback[node.id]})
        configs[node.id] = {"setup": setup, "config": config}
    return configs


def build_plan(topology, pool, overrides=None, kind="vxlan"):
    mapping = map_nodes(topology, pool, overrides)
    tunnels = plan_overlay(topology, mapping, kind)
    configs = emit_configs(topology, mapping, tunnels)
    return DeploymentPlan(mapping=mapping, tunnels=tunnels, node_configs=configs)
