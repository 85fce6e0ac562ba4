"""Logically centralized controller: topology discovery over the emulated
network, label allocation, path computation, and provisioning/teardown of the
three service kinds (IP VLL, pseudowire, virtual switch).

Provisioning is rule-complete: every flow rule, label, encapsulator binding
and bridge instance a service needs is installed through the node state, and
teardown restores the exact pre-provisioning baseline.
"""

import heapq
import random
from dataclasses import dataclass, field

from .errors import (EndpointConflict, HybridNetError, InvalidArgument,
                     LabelExhausted, NoPathError, UnknownService)
from .flowtable import (Match, output, pop_mpls, push_mpls, set_eth_dst,
                        set_eth_src, set_mpls_label, to_ace)
from .flowtable import PRIO_SERVICE
from .frames import ETH_ARP, ETH_IP, ETH_LLDP, ETH_MPLS, ETH_MPLS_MULTICAST, Frame
from .frames import ip_frame
from .network import LearningBridge, PwBinding, ip_to_int
from .steiner import kmb_steiner, lex_shortest_path, lex_shortest_paths
from .topo import SVC_PW, SVC_VLL, SVC_VSS

MIN_LABEL = 16
MAX_LABEL = 1 << 20

PROBE_SRC_MAC = "02:00:00:00:00:00"
PROBE_DST_MAC = "01:80:c2:00:00:0e"


@dataclass
class DiscoveredGraph:
    """Layer-2 adjacency learned from per-port discovery probes."""

    vertices: list
    edges: list  # (nodeA, portA, nodeB, portB) with nodeA < nodeB
    freshness: dict = field(default_factory=dict)  # edge -> last-seen round

    def adjacency(self):
        adj = {v: {} for v in self.vertices}
        for a, _pa, b, _pb in self.edges:
            adj[a][b] = 1
            adj[b][a] = 1
        return adj

    def ports_between(self, u, v):
        """Deterministically ordered (u-port, v-port) pairs for u-v edges."""
        pairs = []
        for a, pa, b, pb in self.edges:
            if (a, b) == (u, v):
                pairs.append((pa, pb))
            elif (a, b) == (v, u):
                pairs.append((pb, pa))
        return sorted(pairs, key=lambda pp: ((len(pp[0]), pp[0]), (len(pp[1]), pp[1])))


class LabelAllocator:
    """Smallest-free-first MPLS label pool, independent per link and direction.
    Labels below 16 stay reserved."""

    def __init__(self):
        self.pools = {}

    def _pool(self, key):
        return self.pools.setdefault(key, {"next": MIN_LABEL, "released": [], "in_use": set()})

    def allocate(self, link_id, direction=None):
        pool = self._pool((link_id, direction))
        if pool["released"]:
            label = heapq.heappop(pool["released"])
        elif pool["next"] < MAX_LABEL:
            label = pool["next"]
            pool["next"] += 1
        else:
            raise LabelExhausted(f"label space exhausted on {link_id!r}", subject=link_id)
        pool["in_use"].add(label)
        return label

    def release(self, link_id, label, direction=None):
        pool = self._pool((link_id, direction))
        if label not in pool["in_use"]:
            raise InvalidArgument(f"label {label} not allocated on {link_id!r}",
                                  subject=link_id)
        pool["in_use"].remove(label)
        heapq.heappush(pool["released"], label)

    def in_use(self, link_id, direction=None):
        return set(self._pool((link_id, direction))["in_use"])


@dataclass
class LspRecord:
    """One installed label-switched path of a service (one direction)."""

    sbp_id: str
    service_id: str
    direction: str
    path: list  # (node, in-port, out-port)
    labels: dict  # link-id -> label
    installed_rules: list = field(default_factory=list)  # (node-id, rule-id)

    def to_doc(self):
        return {
            "sbpId": self.sbp_id,
            "serviceId": self.service_id,
            "direction": self.direction,
            "path": [list(hop) for hop in self.path],
            "labels": dict(sorted(self.labels.items())),
            "installedRules": [list(r) for r in self.installed_rules],
        }


@dataclass
class VssInstance:
    vss_id: str
    branching_points: set
    tree: list  # (u, v) edges
    pws: list   # pseudowire ids

    def to_doc(self):
        return {
            "vssId": self.vss_id,
            "branchingPoints": sorted(self.branching_points),
            "tree": [list(e) for e in sorted(self.tree)],
            "pws": list(self.pws),
        }


@dataclass
class ProvisionRecord:
    service_id: str
    kind: str
    customer: str = ""
    sbps: list = field(default_factory=list)
    vss: VssInstance = None
    rules: list = field(default_factory=list)          # (node, table, rule-id)
    removed_rules: list = field(default_factory=list)  # (node, table, FlowRule)
    labels: list = field(default_factory=list)         # (link, direction, label)
    bindings: list = field(default_factory=list)       # (node, customer, local-port)
    arp_entries: list = field(default_factory=list)    # (node, customer, remote-vtep)
    bridges: list = field(default_factory=list)        # (node, vss-id)
    subports: list = field(default_factory=list)       # (node, port, vlan)
    port_roles: list = field(default_factory=list)     # (node, pseudo-port)
    claims: list = field(default_factory=list)

    def to_doc(self):
        doc = {
            "serviceId": self.service_id,
            "kind": self.kind,
            "sbps": [s.to_doc() for s in self.sbps],
        }
        if self.customer:
            doc["customer"] = self.customer
        if self.vss is not None:
            doc["vss"] = self.vss.to_doc()
        return doc


def compute_sbp_path(graph: DiscoveredGraph, pe_a, pe_b):
    """Minimum-hop path between two edge nodes; among equal-length paths the
    lexicographically smallest node sequence wins."""
    adj = graph.adjacency()
    if pe_a not in adj or pe_b not in adj:
        raise NoPathError(f"endpoint missing from discovered graph", subject=pe_a)
    _, path = lex_shortest_path(adj, pe_a, pe_b)
    return list(path)


def select_branching_points(graph: DiscoveredGraph, endpoints, mode, seed):
    """Pick virtual-bridge locations for a multipoint service.

    unoptimized: one seeded-random node, star of shortest paths.
    optimized: KMB tree; branch vertices of degree >= 3 host bridges, and a
    degenerate path-shaped tree gets a single midpoint bridge.
    """
    terminals = sorted(set(endpoints))
    adj = graph.adjacency()
    if mode == "unoptimized":
        rng = random.Random(seed)
        candidates = sorted(adj)
        hub = candidates[rng.randrange(len(candidates))]
        edges = set()
        paths = lex_shortest_paths(adj, hub)
        for t in terminals:
            if t not in paths:
                raise NoPathError(f"no path from {hub!r} to {t!r}", subject=t)
            _, path = paths[t]
            for a, b in zip(path, path[1:]):
                edges.add((a, b) if a < b else (b, a))
        return {hub}, sorted(edges)

    if mode != "optimized":
        raise InvalidArgument(f"unknown vss mode {mode!r}", subject=mode)
    tree = kmb_steiner(adj, terminals)
    if not tree:
        # all endpoints on one node
        return {terminals[0]}, []
    degree = {}
    for u, v in tree:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    branches = {v for v, d in degree.items() if d >= 3}
    if branches:
        return branches, tree
    # path-shaped tree: single midpoint bridge
    ends = sorted(v for v, d in degree.items() if d == 1)
    adj_t = {}
    for u, v in tree:
        adj_t.setdefault(u, []).append(v)
        adj_t.setdefault(v, []).append(u)
    seq = [ends[0]]
    prev = None
    while len(seq) < len(degree):
        nxt = [n for n in adj_t[seq[-1]] if n != prev]
        prev = seq[-1]
        seq.append(nxt[0])
    return {seq[len(seq) // 2]}, tree


class Controller:
    """Single-writer controller bound to one network instance."""

    def __init__(self, network):
        self.network = network
        self.alloc = LabelAllocator()
        self.records = network.provisioned
        self.claims = {}
        self.customer_idx = {}
        self._graph = None
        self._round = 0

    # -- discovery ---------------------------------------------------------------

    def discover(self):
        """Emit one discovery probe per (node, core port); each punted probe
        yields one edge. Loss-free emulation makes this exact."""
        self._round += 1
        oshi = sorted(n.node_id for n in self.network.nodes.values()
                      if n.kind in ("CoreRouter", "ProviderEdge"))
        edges = {}
        for node_id in oshi:
            node = self.network.nodes[node_id]
            for port in node.core_ports:
                probe = Frame(eth_src=PROBE_SRC_MAC, eth_dst=PROBE_DST_MAC,
                              ethertype=ETH_LLDP,
                              payload=f"probe {node_id} {port}".encode())
                ctx = self.network.inject_frame(*self._wire_peer(node_id, port),
                                                probe)
                for rx_node, rx_port, frame in ctx.controller_frames:
                    _tag, origin, origin_port = frame.payload.decode().split(" ")
                    key = ((origin, origin_port, rx_node, rx_port)
                           if origin < rx_node else
                           (rx_node, rx_port, origin, origin_port))
                    edges[key] = self._round
        graph = DiscoveredGraph(vertices=oshi, edges=sorted(edges),
                                freshness=dict(edges))
        self._graph = graph
        return graph

    def _wire_peer(self, node_id, port):
        peer = self.network.peer_of(node_id, port)
        if peer is None:
            raise NoPathError(f"port {port!r} of {node_id!r} is unconnected", subject=node_id)
        return peer[0], peer[1]

    def graph(self):
        if self._graph is None:
            self.discover()
        return self._graph

    # -- provisioning -------------------------------------------------------------

    def provision(self, service):
        if service.id in self.records:
            raise InvalidArgument(f"service {service.id!r} already provisioned",
                                  subject=service.id, code="ALREADY_PROVISIONED")
        if service.kind == SVC_VLL:
            return self.provision_vll(service)
        if service.kind == SVC_PW:
            return self.provision_pw(service)
        if service.kind == SVC_VSS:
            return self.provision_vss(service)
        raise InvalidArgument(f"unknown service kind {service.kind!r}", subject=service.id)

    def provision_all(self):
        return [self.provision(s) for s in self.network.topology.services]

    def _claim(self, record, endpoint, service_id):
        key = endpoint.claim()
        owner = self.claims.get(key)
        if owner is not None:
            raise EndpointConflict(
                f"endpoint {key} already claimed by {owner!r}", subject=service_id)
        self.claims[key] = service_id
        record.claims.append(key)

    def _access_ports(self, record, endpoint):
        """(classification in-port, egress out-port) for an access endpoint;
        registers the VLAN subport or diverts the port from regular IP."""
        node = self.network.nodes[endpoint.pe]
        if endpoint.vlan is not None:
            sub = node.subports.get((endpoint.port, endpoint.vlan))
            if sub is None:
                sub = node.register_subport(endpoint.port, endpoint.vlan)
                record.subports.append((endpoint.pe, endpoint.port, endpoint.vlan))
            return sub, sub
        self._remove_bridge_rules(record, node, endpoint.port)
        return endpoint.port, endpoint.port

    def _remove_bridge_rules(self, record, node, port):
        """An untagged service claim takes the whole port away from regular IP:
        the two bootstrap bridge rules go, to be restored at teardown."""
        internal = node.port_pairs[port]
        for match in (Match(in_port=port), Match(in_port=internal)):
            for rule in list(node.table0.rules):
                if rule.match == match:
                    node.table0.remove(rule.rule_id)
                    record.removed_rules.append((node.node_id, 0, rule))

    def _install(self, record, node_id, table_id, priority, match, actions):
        node = self.network.nodes[node_id]
        rule = node.install_rule(table_id, priority, match, actions)
        record.rules.append((node_id, table_id, rule.rule_id))
        return rule

    def _hops(self, path_nodes):
        """Resolve a node path into per-hop (link-id, tx-port, rx-port)."""
        graph = self.graph()
        hops = []
        for u, v in zip(path_nodes, path_nodes[1:]):
            pairs = graph.ports_between(u, v)
            if not pairs:
                raise NoPathError(f"no discovered edge {u!r}-{v!r}", subject=u)
            pu, pv = pairs[0]
            link = self.network.peer_of(u, pu)[2]
            hops.append((link, pu, pv))
        return hops

    def _mac(self, node_id, port):
        return self.network.plan.port_mac[(node_id, port)]

    # -- IP VLL --------------------------------------------------------------------

    def provision_vll(self, service):
        if len(service.endpoints) != 2:
            raise InvalidArgument("IpVll needs exactly 2 endpoints", subject=service.id)
        record = ProvisionRecord(service_id=service.id, kind=SVC_VLL)
        ep_a, ep_b = service.endpoints
        try:
            self._claim(record, ep_a, service.id)
            self._claim(record, ep_b, service.id)
            in_a, out_a = self._access_ports(record, ep_a)
            in_b, out_b = self._access_ports(record, ep_b)
            if ep_a.pe == ep_b.pe:
                # co-located endpoints: direct patch, no labels involved
                for src_in, dst_out, direction in ((in_a, out_b, "forward"),
                                                   (in_b, out_a, "reverse")):
                    rules = []
                    for ethertype in (ETH_IP, ETH_ARP):
                        rule = self._install(
                            record, ep_a.pe, 0, PRIO_SERVICE,
                            Match(in_port=src_in, ethertype=ethertype),
                            [output(dst_out)])
                        rules.append((ep_a.pe, rule.rule_id))
                    record.sbps.append(LspRecord(
                        sbp_id=f"{service.id}:{direction}", service_id=service.id,
                        direction=direction, path=[(ep_a.pe, src_in, dst_out)],
                        labels={}, installed_rules=rules))
            else:
                path = compute_sbp_path(self.graph(), ep_a.pe, ep_b.pe)
                record.sbps.append(self._vll_direction(
                    record, service.id, "forward", path, in_a, out_b))
                record.sbps.append(self._vll_direction(
                    record, service.id, "reverse", list(reversed(path)), in_b, out_a))
        except HybridNetError:
            self._rollback(record)
            raise
        self.records[service.id] = record
        return record

    def _vll_direction(self, record, service_id, direction, nodes, access_in, access_out):
        hops = self._hops(nodes)
        labels = {}
        for (link, _tx, _rx), tx_node in zip(hops, nodes):
            label = self.alloc.allocate(link, direction=tx_node)
            labels[link] = label
            record.labels.append((link, tx_node, label))
        rules = []
        path = []

        first_link, first_tx, _ = hops[0]
        # ingress: IP rides the unicast MPLS ethertype, ARP the multicast one,
        # sharing one label per link
        for ethertype, mpls_type in ((ETH_IP, ETH_MPLS), (ETH_ARP, ETH_MPLS_MULTICAST)):
            rule = self._install(
                record, nodes[0], 0, PRIO_SERVICE,
                Match(in_port=access_in, ethertype=ethertype),
                [push_mpls(labels[first_link], mpls_type), output(first_tx)])
            rules.append((nodes[0], rule.rule_id))
        path.append((nodes[0], access_in, first_tx))

        for i in range(1, len(nodes) - 1):
            in_link, _tx, rx_port = hops[i - 1]
            out_link, tx_port, _ = hops[i]
            rule = self._install(
                record, nodes[i], 1, PRIO_SERVICE,
                Match(in_port=rx_port, mpls_label=labels[in_link]),
                [set_mpls_label(labels[out_link]), output(tx_port)])
            rules.append((nodes[i], rule.rule_id))
            path.append((nodes[i], rx_port, tx_port))

        last_link, _tx, last_rx = hops[-1]
        for mpls_type, restore in ((ETH_MPLS, ETH_IP), (ETH_MPLS_MULTICAST, ETH_ARP)):
            rule = self._install(
                record, nodes[-1], 1, PRIO_SERVICE,
                Match(in_port=last_rx, mpls_label=labels[last_link], ethertype=mpls_type),
                [pop_mpls(restore), output(access_out)])
            rules.append((nodes[-1], rule.rule_id))
        path.append((nodes[-1], last_rx, access_out))

        return LspRecord(sbp_id=f"{service_id}:{direction}", service_id=service_id,
                         direction=direction, path=path, labels=labels,
                         installed_rules=rules)

    # -- Pseudowire -------------------------------------------------------------------

    def provision_pw(self, service):
        if len(service.endpoints) != 2:
            raise InvalidArgument("Pw needs exactly 2 endpoints", subject=service.id)
        customer = service.options.get("customer", service.id)
        record = ProvisionRecord(service_id=service.id, kind=SVC_PW, customer=customer)
        ep_a, ep_b = service.endpoints
        try:
            self._claim(record, ep_a, service.id)
            self._claim(record, ep_b, service.id)
            self._provision_pw_leg(record, service.id, customer,
                                   ("access", ep_a), ("access", ep_b))
        except HybridNetError:
            self._rollback(record)
            raise
        self.records[service.id] = record
        return record

    def _customer_index(self, customer):
        if customer not in self.customer_idx:
            self.customer_idx[customer] = len(self.customer_idx) + 1
        return self.customer_idx[customer]

    def _ensure_encap(self, record, node_id, customer):
        from .network import Encapsulator
        node = self.network.nodes[node_id]
        encap = node.encaps.get(customer)
        if encap is None:
            encap = Encapsulator(customer, node_id, self._customer_index(customer),
                                 node.index)
            node.encaps[customer] = encap
        return encap

    def _end_node(self, end):
        return end[1].pe if end[0] == "access" else end[1]

    def _provision_pw_leg(self, record, pw_id, customer, end_a, end_b):
        """Provision one pseudowire between two attachments, each either an
        access endpoint or a (node, vss, bridge-port) bridge attachment."""
        node_a, node_b = self._end_node(end_a), self._end_node(end_b)
        if node_a == node_b:
            self._provision_pw_patch(record, pw_id, end_a, end_b)
            return

        encap_a = self._ensure_encap(record, node_a, customer)
        encap_b = self._ensure_encap(record, node_b, customer)
        parallel = sum(1 for b in encap_a.bindings.values()
                       if b.attach and b.attach[-1] == node_b)
        vtep_a = encap_a.allocate_local_vtep(parallel)
        vtep_b = encap_b.allocate_local_vtep(parallel)
        session = parallel

        lp_a, rp_a = encap_a.next_ports()
        lp_b, rp_b = encap_b.next_ports()
        net_a, net_b = self.network.nodes[node_a], self.network.nodes[node_b]
        net_a.port_role[rp_a] = ("ace_remote", customer)
        net_b.port_role[rp_b] = ("ace_remote", customer)
        record.port_roles.extend([(node_a, rp_a), (node_b, rp_b)])

        attach_a = self._attach_of(record, end_a, node_a, lp_a, node_b)
        attach_b = self._attach_of(record, end_b, node_b, lp_b, node_a)
        encap_a.bind(PwBinding(local_port=lp_a, remote_port=rp_a, local_vtep=vtep_a,
                               remote_vtep=vtep_b, session=session, attach=attach_a))
        encap_b.bind(PwBinding(local_port=lp_b, remote_port=rp_b, local_vtep=vtep_b,
                               remote_vtep=vtep_a, session=session, attach=attach_b))
        record.bindings.extend([(node_a, customer, lp_a), (node_b, customer, lp_b)])

        # static ARP entries from the per-customer address database
        for encap, remote_vtep, remote_encap in ((encap_a, vtep_b, encap_b),
                                                 (encap_b, vtep_a, encap_a)):
            if remote_vtep not in encap.static_arp:
                encap.static_arp[remote_vtep] = remote_encap.local_mac(remote_vtep)
                record.arp_entries.append((encap.node_id, customer, remote_vtep))

        path = compute_sbp_path(self.graph(), node_a, node_b)
        record.sbps.append(self._pw_direction(
            record, pw_id, "forward", path, end_a, lp_a, rp_a, rp_b))
        record.sbps.append(self._pw_direction(
            record, pw_id, "reverse", list(reversed(path)), end_b, lp_b, rp_b, rp_a))

    def _attach_of(self, record, end, node_id, local_port, remote_node):
        """Build binding attachment metadata and the ingress/egress access
        rules (the bridge side needs no rules: its ports patch straight into
        the encapsulator)."""
        if end[0] == "access":
            ep = end[1]
            access_in, access_out = self._access_ports(record, ep)
            # customer frames entering the access port go to the encapsulator
            self._install(record, node_id, 0, PRIO_SERVICE,
                          Match(in_port=access_in),
                          [to_ace(self._customer_of(record), local_port)])
            # decapsulated frames re-enter the pipeline on the local port
            self._install(record, node_id, 0, PRIO_SERVICE,
                          Match(in_port=local_port), [output(access_out)])
            return ("access", access_out, remote_node)
        _, bridge_node, vss_id, bridge_port = end
        bridge = self.network.nodes[bridge_node].bridges[vss_id]
        bridge.attach[bridge_port] = ("ace", self._customer_of(record), local_port)
        return ("bridge", vss_id, bridge_port, remote_node)

    def _customer_of(self, record):
        return record.customer or record.service_id

    def _pw_direction(self, record, pw_id, direction, nodes, src_end, src_local,
                      src_remote, dst_remote):
        hops = self._hops(nodes)
        labels = {}
        for (link, _tx, _rx), tx_node in zip(hops, nodes):
            label = self.alloc.allocate(link, direction=tx_node)
            labels[link] = label
            record.labels.append((link, tx_node, label))
        rules = []
        path = []

        first_link, first_tx, first_rx = hops[0]
        # encapsulated packet heading to the core: push the label and rewrite
        # the outer MACs to the actual router interface addresses
        rule = self._install(
            record, nodes[0], 0, PRIO_SERVICE, Match(in_port=src_remote),
            [push_mpls(labels[first_link], ETH_MPLS),
             set_eth_src(self._mac(nodes[0], first_tx)),
             set_eth_dst(self._mac(nodes[1], first_rx)),
             output(first_tx)])
        rules.append((nodes[0], rule.rule_id))
        path.append((nodes[0], src_local, first_tx))

        for i in range(1, len(nodes) - 1):
            in_link, _tx, rx_port = hops[i - 1]
            out_link, tx_port, next_rx = hops[i]
            rule = self._install(
                record, nodes[i], 1, PRIO_SERVICE,
                Match(in_port=rx_port, mpls_label=labels[in_link]),
                [set_mpls_label(labels[out_link]),
                 set_eth_src(self._mac(nodes[i], tx_port)),
                 set_eth_dst(self._mac(nodes[i + 1], next_rx)),
                 output(tx_port)])
            rules.append((nodes[i], rule.rule_id))
            path.append((nodes[i], rx_port, tx_port))

        last_link, _tx, last_rx = hops[-1]
        rule = self._install(
            record, nodes[-1], 1, PRIO_SERVICE,
            Match(in_port=last_rx, mpls_label=labels[last_link]),
            [pop_mpls(ETH_IP), output(dst_remote)])
        rules.append((nodes[-1], rule.rule_id))
        path.append((nodes[-1], last_rx, dst_remote))

        return LspRecord(sbp_id=f"{pw_id}:{direction}", service_id=record.service_id,
                         direction=direction, path=path, labels=labels,
                         installed_rules=rules)

    def _provision_pw_patch(self, record, pw_id, end_a, end_b):
        """Degenerate pseudowire with both attachments on one node: install
        direct patch rules, no tunnel or labels."""
        node_id = self._end_node(end_a)
        node = self.network.nodes[node_id]
        sides = []
        for end in (end_a, end_b):
            if end[0] == "access":
                access_in, access_out = self._access_ports(record, end[1])
                sides.append(("access", access_in, access_out))
            else:
                _, _bnode, vss_id, bridge_port = end
                sides.append(("bridge", vss_id, bridge_port))
        rules = []
        for src, dst in ((sides[0], sides[1]), (sides[1], sides[0])):
            dst_port = dst[2]  # access egress port/subport, or bridge port
            if src[0] == "access":
                rule = self._install(record, node_id, 0, PRIO_SERVICE,
                                     Match(in_port=src[1]), [output(dst_port)])
                rules.append((node_id, rule.rule_id))
            else:
                # frames leaving the bridge on this port go straight out the
                # co-located access port
                node.bridges[src[1]].attach[src[2]] = ("patch", dst_port)
        record.sbps.append(LspRecord(
            sbp_id=f"{pw_id}:patch", service_id=record.service_id, direction="forward",
            path=[(node_id, None, None)], labels={}, installed_rules=rules))

    # -- Virtual switch -------------------------------------------------------------

    def provision_vss(self, service, mode=None, seed=None):
        if len(service.endpoints) < 2:
            raise InvalidArgument("Vss needs at least 2 endpoints", subject=service.id)
        mode = mode or service.options.get("vssMode", "optimized")
        seed = seed if seed is not None else service.options.get("seed", 0)
        record = ProvisionRecord(service_id=service.id, kind=SVC_VSS, customer=service.id)
        try:
            for ep in service.endpoints:
                self._claim(record, ep, service.id)
            terminals = [ep.pe for ep in service.endpoints]
            bps, tree = select_branching_points(self.graph(), terminals, mode, seed)
            bridges = {}
            for bp in sorted(bps):
                bridge = LearningBridge(service.id, bp)
                self.network.nodes[bp].bridges[service.id] = bridge
                bridges[bp] = bridge
                record.bridges.append((bp, service.id))

            tree_adj = {}
            for u, v in tree:
                tree_adj.setdefault(u, set()).add(v)
                tree_adj.setdefault(v, set()).add(u)

            pws = []
            for n, ep in enumerate(service.endpoints):
                bp = _nearest_bp(tree_adj, ep.pe, bps)
                bridge = bridges[bp]
                bport = bridge.add_port()
                self.network.nodes[bp].port_role[bport] = ("bridge", service.id)
                record.port_roles.append((bp, bport))
                pw_id = f"{service.id}:pw{n}"
                self._provision_pw_leg(record, pw_id, service.id,
                                       ("access", ep),
                                       ("bridge", bp, service.id, bport))
                pws.append(pw_id)

            n_pw = len(service.endpoints)
            for b1, b2 in _bridge_adjacency(tree_adj, bps):
                p1, p2 = bridges[b1].add_port(), bridges[b2].add_port()
                self.network.nodes[b1].port_role[p1] = ("bridge", service.id)
                self.network.nodes[b2].port_role[p2] = ("bridge", service.id)
                record.port_roles.extend([(b1, p1), (b2, p2)])
                pw_id = f"{service.id}:pw{n_pw}"
                n_pw += 1
                self._provision_pw_leg(record, pw_id, service.id,
                                       ("bridge", b1, service.id, p1),
                                       ("bridge", b2, service.id, p2))
                pws.append(pw_id)

            record.vss = VssInstance(vss_id=service.id, branching_points=set(bps),
                                     tree=list(tree), pws=pws)
        except HybridNetError:
            self._rollback(record)
            raise
        self.records[service.id] = record
        return record

    # -- teardown ----------------------------------------------------------------------

    def teardown(self, service_id):
        record = self.records.get(service_id)
        if record is None:
            raise UnknownService(f"service {service_id!r} is not provisioned",
                                 subject=service_id)
        self._rollback(record)
        del self.records[service_id]

    def _rollback(self, record):
        net = self.network
        for node_id, table_id, rule_id in record.rules:
            net.nodes[node_id].remove_rule(table_id, rule_id)
        for node_id, table_id, rule in record.removed_rules:
            net.nodes[node_id].table(table_id).install(rule)
        for link, tx_node, label in record.labels:
            self.alloc.release(link, label, direction=tx_node)
        for node_id, customer, local_port in record.bindings:
            encap = net.nodes[node_id].encaps.get(customer)
            if encap is not None:
                encap.unbind(local_port)
        for node_id, customer, remote_vtep in record.arp_entries:
            encap = net.nodes[node_id].encaps.get(customer)
            if encap is None:
                continue
            still_used = any(b.remote_vtep == remote_vtep for b in encap.bindings.values())
            if not still_used:
                encap.static_arp.pop(remote_vtep, None)
        for node_id, customer, _ in record.bindings:
            encap = net.nodes[node_id].encaps.get(customer)
            if encap is not None and not encap.bindings:
                del net.nodes[node_id].encaps[customer]
        for node_id, vss_id in record.bridges:
            net.nodes[node_id].bridges.pop(vss_id, None)
        for node_id, port in record.port_roles:
            net.nodes[node_id].port_role.pop(port, None)
        for node_id, port, vlan in record.subports:
            net.nodes[node_id].unregister_subport(port, vlan)
        for claim in record.claims:
            self.claims.pop(claim, None)
        record.rules.clear()
        record.removed_rules.clear()
        record.labels.clear()
        record.bindings.clear()
        record.arp_entries.clear()
        record.bridges.clear()
        record.port_roles.clear()
        record.subports.clear()
        record.claims.clear()


def _nearest_bp(tree_adj, start, bps):
    """Closest branching point by tree walk; ties break on node id."""
    if start in bps:
        return start
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for node in frontier:
            for nbr in tree_adj.get(node, ()):
                if nbr not in seen:
                    seen.add(nbr)
                    nxt.append(nbr)
        hits = sorted(n for n in nxt if n in bps)
        if hits:
            return hits[0]
        frontier = sorted(nxt)
    raise NoPathError(f"no branching point reachable from {start!r}", subject=start)


def _bridge_adjacency(tree_adj, bps):
    """Pairs of branching points whose connecting tree path holds no other
    branching point."""
    pairs = set()
    for b in sorted(bps):
        for nbr in sorted(tree_adj.get(b, ())):
            # walk away from b until another branching point (or a dead end)
            prev, cur = b, nbr
            while cur not in bps:
                nxt = [n for n in tree_adj[cur] if n != prev]
                if not nxt:
                    cur = None
                    break
                prev, cur = cur, nxt[0]
            if cur is not None and cur != b:
                pairs.add((b, cur) if b < cur else (cur, b))
    return sorted(pairs)


def verify_control_connectivity(network):
    """Check that every programmable node can reach its assigned controller
    over plain IP routing alone (in-band control)."""
    plan = network.plan
    unreachable = []
    checked = 0
    for node_id in sorted(network.nodes):
        node = network.nodes[node_id]
        if node.kind not in ("CoreRouter", "ProviderEdge"):
            continue
        ctrl = network.topology.controller_assignment.get(node_id)
        if ctrl is None:
            continue
        checked += 1
        addr = plan.controller_address(ctrl)
        if ip_to_int(addr) in node.local_addrs:
            continue
        frame = ip_frame("00:00:00:00:00:00", "00:00:00:00:00:00",
                         node.loopback, addr, payload=b"ctrl-probe")
        ctx = network.inject_ip(node_id, frame)
        ok = any(where == "local" and f.ip and f.ip.dst == addr
                 for _node, where, f in ctx.delivered)
        if not ok:
            unreachable.append((node_id, ctrl))
    return {
        "ok": not unreachable,
        "checked": checked,
        "unreachable": [list(pair) for pair in unreachable],
    }
