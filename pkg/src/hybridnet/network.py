"""Packet-level network runtime: per-node pipeline state, IP forwarding,
GRE access encapsulation, learning bridges, and the single-packet push loop.

Each emulated CR/PE node couples a two-table flow pipeline with an IP engine
reachable through per-port internal ports: best-effort IP packets bridge from
a physical port to its internal twin, get routed, and re-enter the pipeline,
so a transit node sees every IP packet cross the switch twice. Label-switched
traffic diverts to table 1 at the coexistence rules and never touches the IP
engine.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .addressing import AddressPlan, vtep_ip, vtep_mac
from .costmodel import CostModel
from .errors import (FrameInvariantError, HybridNetError, InvalidArgument,
                     UnboundPort, UnknownVtep)
from .flowtable import (MPLS_ACTIONS, FlowRule, FlowTable, Match, bootstrap_rules)
from .frames import (ETH_IP, GRE_HEADER, GRE_TRANSPARENT_ETHERNET, IP_HEADER,
                     PROTO_GRE, BROADCAST_MAC, Frame, GreHeader, IpHeader)
from .topo import KIND_CE, KIND_CR, KIND_CTRL, KIND_PE, validate

DROP_NO_RULE = "NO_RULE"
DROP_NO_SBP_MATCH = "NO_SBP_MATCH"
DROP_TTL_EXPIRED = "TTL_EXPIRED"
DROP_MPLS_TTL_EXPIRED = "MPLS_TTL_EXPIRED"
DROP_NO_ROUTE = "NO_ROUTE"
DROP_NOT_IP = "NOT_IP"
DROP_UNCONNECTED_PORT = "UNCONNECTED_PORT"

MAX_PACKET_STEPS = 10000

INTERNAL_PREFIX = "int:"


def internal_port(port):
    return INTERNAL_PREFIX + port


def ip_to_int(addr):
    a, b, c, d = (int(x) for x in addr.split("."))
    return (a << 24) | (b << 16) | (c << 8) | d


def _mask(masklen):
    return ((1 << masklen) - 1) << (32 - masklen) if masklen else 0


@dataclass
class FibEntry:
    net: int
    masklen: int
    local: bool = False
    out_port: Optional[str] = None
    next_hop_node: Optional[str] = None
    next_hop_mac: Optional[str] = None

    def covers(self, dst_int):
        return (dst_int & _mask(self.masklen)) == self.net


@dataclass
class PwBinding:
    local_port: str
    remote_port: str
    local_vtep: str
    remote_vtep: str
    session: int
    # ('access', out-port-or-subport) at a PE, ('bridge', vss-id, bridge-port)
    # at a branching point.
    attach: tuple = ()


class Encapsulator:
    """Per-customer GRE encapsulation endpoint at an edge node. Each pseudowire
    binds one local port to a remote tunnel endpoint; static ARP entries cover
    every remote VTEP in use."""

    def __init__(self, customer, node_id, customer_idx, node_idx):
        self.customer = customer
        self.node_id = node_id
        self.customer_idx = customer_idx
        self.node_idx = node_idx
        self.vtep_primary = vtep_ip(customer_idx, node_idx)
        self.static_arp = {}
        self.bindings = {}
        self._own_octets = {node_idx}
        self._alias_next = 254
        self._seq = 0

    def local_mac(self, local_vtep):
        octet = int(local_vtep.rsplit(".", 1)[1])
        return vtep_mac(self.customer_idx, octet, self.node_idx)

    def allocate_local_vtep(self, nth_parallel):
        """Primary VTEP for the first pseudowire toward a given peer; later
        parallel pseudowires get alias addresses so keyless GRE stays
        demultiplexable by (src, dst) pair."""
        if nth_parallel == 0:
            return self.vtep_primary
        while self._alias_next in self._own_octets:
            self._alias_next -= 1
        octet = self._alias_next
        self._own_octets.add(octet)
        return vtep_ip(self.customer_idx, octet)

    def next_ports(self):
        n = self._seq
        self._seq += 1
        base = f"ace:{self.customer}:{n}"
        return f"{base}:l", f"{base}:r"

    def bind(self, binding):
        self.bindings[binding.local_port] = binding

    def unbind(self, local_port):
        binding = self.bindings.pop(local_port, None)
        if binding is not None:
            octet = int(binding.local_vtep.rsplit(".", 1)[1])
            if binding.local_vtep != self.vtep_primary:
                self._own_octets.discard(octet)
        return binding

    def encap(self, local_port, frame):
        binding = self.bindings.get(local_port)
        if binding is None:
            raise UnboundPort(f"no pseudowire bound to {local_port!r}", subject=local_port)
        remote_mac = self.static_arp.get(binding.remote_vtep)
        if remote_mac is None:
            raise UnknownVtep(f"no static ARP entry for {binding.remote_vtep!r}",
                              subject=binding.remote_vtep)
        total_len = IP_HEADER + GRE_HEADER + frame.wire_size
        return Frame(
            eth_src=self.local_mac(binding.local_vtep),
            eth_dst=remote_mac,
            ethertype=ETH_IP,
            ip=IpHeader(src=binding.local_vtep, dst=binding.remote_vtep,
                        proto=PROTO_GRE, ttl=64, total_len=total_len),
            gre=GreHeader(GRE_TRANSPARENT_ETHERNET),
            payload=frame,
        )

    def decap(self, frame):
        if frame.gre is None or frame.gre.protocol_type != GRE_TRANSPARENT_ETHERNET \
                or not isinstance(frame.payload, Frame):
            raise FrameInvariantError("not a transparent-Ethernet GRE frame", subject="gre")
        if frame.ip.src not in self.static_arp:
            raise UnknownVtep(f"unknown source VTEP {frame.ip.src!r}", subject=frame.ip.src)
        for binding in self.bindings.values():
            if binding.local_vtep == frame.ip.dst and binding.remote_vtep == frame.ip.src:
                return binding.local_port, frame.payload
        raise UnknownVtep(
            f"no pseudowire for VTEP pair {frame.ip.src!r}->{frame.ip.dst!r}",
            subject=frame.ip.src)


class LearningBridge:
    """Flood-and-learn layer 2 switch instance for one virtual switch service;
    it has only remote (pseudowire-facing) ports."""

    def __init__(self, vss_id, node_id):
        self.vss_id = vss_id
        self.node_id = node_id
        self.ports = []
        self.mac_table = {}
        self.attach = {}  # port -> ('ace', customer, local-port) | ('patch', out-port)
        self._seq = 0

    def add_port(self):
        port = f"vbp:{self.vss_id}:{self._seq}"
        self._seq += 1
        self.ports.append(port)
        return port

    def forward(self, in_port, frame):
        self.mac_table[frame.eth_src] = in_port
        dst = frame.eth_dst
        if dst != BROADCAST_MAC and dst in self.mac_table:
            out = self.mac_table[dst]
            return [] if out == in_port else [(out, frame)]
        return [(p, frame.clone()) for p in self.ports if p != in_port]


@dataclass
class NodeCounters:
    packets: int = 0
    bytes: int = 0
    cost: float = 0.0
    max_packet_cost: float = 0.0

    def to_doc(self):
        return {"packets": self.packets, "bytes": self.bytes, "cost": self.cost,
                "maxPacketCost": self.max_packet_cost}


class NodeState:
    """Runtime state of one emulated node."""

    def __init__(self, node_id, kind, index, loopback):
        self.node_id = node_id
        self.kind = kind
        self.index = index
        self.loopback = loopback
        self.plain_router = False
        self.table0 = FlowTable(0)
        self.table1 = FlowTable(1)
        self.phys_ports = []
        self.core_ports = []
        self.port_pairs = {}
        self.port_macs = {}
        self.local_addrs = set()
        self.fib = []
        self.encaps = {}
        self.bridges = {}
        self.subports = {}       # (port, vlan) -> subport id
        self.subport_rev = {}    # subport id -> (port, vlan)
        self.port_role = {}      # pseudo-port id -> role tuple
        self.flow_cache = {}
        self.counters = NodeCounters()
        self._rule_seq = 0

    # -- rule management ------------------------------------------------------

    def table(self, table_id):
        return self.table0 if table_id == 0 else self.table1

    def install_rule(self, table_id, priority, match, actions):
        self._rule_seq += 1
        rule = FlowRule(table_id=table_id, priority=priority, match=match,
                        actions=list(actions), rule_id=f"{self.node_id}/r{self._rule_seq}")
        return self.table(table_id).install(rule)

    def remove_rule(self, table_id, rule_id):
        return self.table(table_id).remove(rule_id)

    def bootstrap(self, vll_multicast=True):
        """Install the initial table-0 rules (the per-node management agent's
        job at boot)."""
        for priority, match, actions in bootstrap_rules(
                self.phys_ports, self.port_pairs, vll_multicast=vll_multicast):
            self.install_rule(0, priority, match, actions)

    def rule_structures(self):
        return {0: self.table0.structures(), 1: self.table1.structures()}

    # -- subports (VLAN-delimited logical access ports) ------------------------

    def register_subport(self, port, vlan):
        sub = f"{port}.{vlan}"
        self.subports[(port, vlan)] = sub
        self.subport_rev[sub] = (port, vlan)
        return sub

    def unregister_subport(self, port, vlan):
        sub = self.subports.pop((port, vlan), None)
        if sub:
            self.subport_rev.pop(sub, None)

    # -- pipeline ---------------------------------------------------------------

    def flow_cache_charge(self, flow_key, normal_cost, cost_model, mode):
        """Per-packet pipeline charge under the kernel flow cache model: the
        first packet of a flow takes the userspace slow path, later packets
        the cached one; with the cache disabled every packet pays the miss."""
        if mode is None:
            return normal_cost
        if mode == "off":
            return cost_model.c_userspace_miss
        if flow_key in self.flow_cache:
            self.flow_cache[flow_key] += 1
            return normal_cost
        self.flow_cache[flow_key] = 1
        return cost_model.c_userspace_miss

    def ofcs_process(self, in_port, frame, cost_model, cache_mode=None):
        """Run one pipeline traversal. Returns (destinations, cost) where each
        destination is a tagged tuple over {port, controller, ipEngine, ace,
        bridge, drop}."""
        dests = []
        mpls_ops = 0

        rule = self.table0.lookup(frame, in_port)
        if rule is None:
            cost = self.flow_cache_charge(
                self._flow_key(in_port, frame), cost_model.c_ofcs_lookup,
                cost_model, cache_mode)
            return [("drop", DROP_NO_RULE)], cost
        chain = [rule]
        if chain[-1].actions and chain[-1].actions[-1][0] == "goto_table":
            t1_rule = self.table1.lookup(frame, in_port)
            if t1_rule is None:
                cost = self.flow_cache_charge(
                    self._flow_key(in_port, frame), cost_model.c_ofcs_lookup,
                    cost_model, cache_mode)
                rule.packets += 1
                rule.bytes += frame.wire_size
                return [("drop", DROP_NO_SBP_MATCH)], cost

            chain.append(t1_rule)

        flow_key = self._flow_key(in_port, frame)
        dropped = None
        for rule in chain:
            rule.packets += 1
            rule.bytes += frame.wire_size
            for action in rule.actions:
                kind = action[0]
                if kind == "goto_table":
                    continue
                if kind == "output":
                    dests.extend(self._resolve_output(action[1], frame))
                elif kind == "to_controller":
                    dests.append(("controller", in_port))
                elif kind == "to_ip_engine":
                    dests.append(("ipEngine",))
                elif kind == "to_ace":
                    dests.append(("ace_encap", action[1], action[2]))
                elif kind == "push_mpls":
                    frame.push_mpls(action[1], ethertype=action[2])
                    mpls_ops += 1
                elif kind == "pop_mpls":
                    frame.pop_mpls(restore_ethertype=action[1])
                    mpls_ops += 1
                elif kind == "set_mpls_label":
                    entry = frame.mpls_stack[0]
                    entry.ttl -= 1
                    mpls_ops += 1
                    if entry.ttl <= 0:
                        dropped = DROP_MPLS_TTL_EXPIRED
                        break
                    frame.set_top_label(action[1])
                elif kind == "set_eth_src":
                    frame.eth_src = action[1]
                elif kind == "set_eth_dst":
                    frame.eth_dst = action[1]
                else:
                    raise HybridNetError(f"unknown action {kind!r}", subject=self.node_id)
            if dropped:
                break

        normal = cost_model.c_ofcs_lookup + mpls_ops * cost_model.c_mpls_op
        cost = self.flow_cache_charge(flow_key, normal, cost_model, cache_mode)
        if dropped:
            return [("drop", dropped)], cost
        return dests, cost

    def _resolve_output(self, port, frame):
        if port.startswith(INTERNAL_PREFIX):
            return [("ipEngine",)]
        role = self.port_role.get(port)
        if role is not None:
            if role[0] == "ace_remote":
                return [("ace_decap", role[1])]
            if role[0] == "bridge":
                return [("bridge", role[1], port)]
        if port in self.subport_rev:
            phys, vlan = self.subport_rev[port]
            frame.push_vlan(vlan)
            return [("port", phys)]
        return [("port", port)]

    def _flow_key(self, in_port, frame):
        ip = frame.ip
        return (in_port, frame.eth_dst, frame.effective_ethertype(),
                tuple(frame.vlan_tags), frame.top_label(),
                (ip.src, ip.dst, ip.proto) if ip else None)

    # -- IP engine --------------------------------------------------------------

    def ip_forward(self, frame):
        """Longest-prefix forwarding. Returns ('local',), ('drop', reason) or
        ('out', port, next_hop_mac)."""
        if frame.ip is None:
            return ("drop", DROP_NOT_IP)
        dst = ip_to_int(frame.ip.dst)
        entry = None
        for cand in self.fib:
            if cand.covers(dst):
                entry = cand
                break
        if entry is not None and entry.local:
            return ("local",)
        if frame.ip.ttl <= 1:
            return ("drop", DROP_TTL_EXPIRED)
        if entry is None:
            return ("drop", DROP_NO_ROUTE)
        frame.ip.ttl -= 1
        frame.eth_src = self.port_macs[entry.out_port]
        frame.eth_dst = entry.next_hop_mac
        return ("out", entry.out_port)


class PacketContext:
    """Per-packet bookkeeping while it is pushed through the network."""

    __slots__ = ("flow_id", "record_trace", "node_cost", "delivered", "drops",
                 "controller_frames", "trace", "steps")

    def __init__(self, flow_id=None, record_trace=False):
        self.flow_id = flow_id
        self.record_trace = record_trace
        self.node_cost = {}
        self.delivered = []
        self.drops = []
        self.controller_frames = []
        self.trace = []
        self.steps = 0


class Network:
    """An instantiated topology: node states, wiring, FIBs and bootstrap rules.

    One instance is single-threaded; independent instances may run in
    parallel. Tunneling and flow-cache behavior are instance-wide knobs that
    model the deployment substrate underneath the emulated nodes.
    """

    def __init__(self, topology, cost_model=None, *, plain_router=False,
                 vll_multicast=True, tunneling="none", flow_cache=None,
                 check=True):
        if check:
            report = validate(topology)
            if not report.ok:
                code, subject, message = report.violations[0]
                raise InvalidArgument(f"invalid topology: {message}", subject=subject,
                                      code=code)
        self.topology = topology
        self.cost_model = cost_model or CostModel.default()
        self.tunneling = tunneling
        self.flow_cache_mode = flow_cache
        self.plan = AddressPlan(topology)
        self.nodes = {}
        self.link_map = {}
        self.provisioned = {}

        for link in topology.links:
            self.link_map[(link.a[0], link.a[1])] = (link.b[0], link.b[1], link.id)
            self.link_map[(link.b[0], link.b[1])] = (link.a[0], link.a[1], link.id)

        for spec in topology.nodes:
            if spec.kind == KIND_CTRL:
                continue
            node = NodeState(spec.id, spec.kind, self.plan.node_index[spec.id],
                             self.plan.loopback[spec.id])
            node.plain_router = plain_router and spec.kind in (KIND_CR, KIND_PE)
            self.nodes[spec.id] = node

        for link in topology.links:
            for end, peer in ((link.a, link.b), (link.b, link.a)):
                node = self.nodes.get(end[0])
                if node is None:
                    continue
                node.phys_ports.append(end[1])
                node.port_macs[end[1]] = self.plan.port_mac[(end[0], end[1])]
                if link.kind == "core":
                    node.core_ports.append(end[1])

        for node in self.nodes.values():
            node.phys_ports.sort(key=lambda p: (len(p), p))
            node.core_ports.sort(key=lambda p: (len(p), p))
            node.port_pairs = {p: internal_port(p) for p in node.phys_ports}
            if node.kind in (KIND_CR, KIND_PE) and not node.plain_router:
                node.bootstrap(vll_multicast=vll_multicast)

        self._build_fibs()

    # -- FIB construction -------------------------------------------------------

    def _graph(self):
        adj = {}
        for node_id, node in self.nodes.items():
            adj[node_id] = {}
        for link in sorted(self.topology.links, key=lambda l: l.id):
            a, b = link.a, link.b
            if a[0] not in adj or b[0] not in adj:
                continue
            for (u, up), (v, vp) in ((a, b), (b, a)):
                best = adj[u].get(v)
                cand = (link.cost_metric, link.id, up, vp)
                if best is None or cand < best:
                    adj[u][v] = cand
        return adj

    def _dijkstra(self, adj, src):
        import heapq
        dist = {src: 0}
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, float("inf")):
                continue
            for v, (w, _l, _up, _vp) in adj[u].items():
                nd = d + w
                if nd < dist.get(v, float("inf")):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def _build_fibs(self):
        adj = self._graph()
        dist = {n: self._dijkstra(adj, n) for n in adj}
        plan = self.plan
        host = plan.controller_host()

        controller_addrs = {}
        for ctrl_id in set(self.topology.controller_assignment.values()):
            addr = plan.controller_address(ctrl_id)
            controller_addrs[ctrl_id] = addr

        def next_hop(src, dst):
            best = None
            for nbr in sorted(adj[src]):
                through = dist[nbr].get(dst)
                if through is None:
                    continue
                w, link_id, my_port, peer_port = adj[src][nbr]
                cand = (w + through, nbr)
                if best is None or cand < best[0:2]:
                    best = (w + through, nbr, my_port, peer_port)
            return best

        for node_id, node in self.nodes.items():
            fib = []
            node.local_addrs = {ip_to_int(node.loopback)}
            fib.append(FibEntry(net=ip_to_int(node.loopback), masklen=32, local=True))
            for (nid, port), addr in plan.if_addr.items():
                if nid == node_id:
                    node.local_addrs.add(ip_to_int(addr))
                    fib.append(FibEntry(net=ip_to_int(addr), masklen=32, local=True))
            if node_id == host:
                for addr in controller_addrs.values():
                    node.local_addrs.add(ip_to_int(addr))
                    fib.append(FibEntry(net=ip_to_int(addr), masklen=32, local=True))

            for other_id, other in sorted(self.nodes.items()):
                if other_id == node_id:
                    continue
                hop = next_hop(node_id, other_id)
                if hop is None:
                    continue
                _, nbr, my_port, peer_port = hop
                fib.append(FibEntry(
                    net=ip_to_int(plan.loopback[other_id]), masklen=32,
                    out_port=my_port, next_hop_node=nbr,
                    next_hop_mac=plan.port_mac[(nbr, peer_port)]))

            if node_id != host:
                hop = next_hop(node_id, host)
                if hop is not None:
                    _, nbr, my_port, peer_port = hop
                    for addr in controller_addrs.values():
                        if ip_to_int(addr) in node.local_addrs:
                            continue
                        fib.append(FibEntry(
                            net=ip_to_int(addr), masklen=32,
                            out_port=my_port, next_hop_node=nbr,
                            next_hop_mac=plan.port_mac[(nbr, peer_port)]))

            for link in sorted(self.topology.links, key=lambda l: l.id):
                a, b = link.a, link.b
                if a[0] not in self.nodes or b[0] not in self.nodes:
                    continue
                net = ip_to_int(plan.link_net[link.id])
                if node_id in (a[0], b[0]):
                    me, peer = (a, b) if a[0] == node_id else (b, a)
                    fib.append(FibEntry(
                        net=net, masklen=30, out_port=me[1], next_hop_node=peer[0],
                        next_hop_mac=plan.port_mac[(peer[0], peer[1])]))
                    continue
                cands = []
                for owner in (a[0], b[0]):
                    d = dist[node_id].get(owner)
                    if d is not None:
                        cands.append((d, owner))
                if not cands:
                    continue
                _, target = min(cands)
                hop = next_hop(node_id, target)
                if hop is None:
                    continue
                _, nbr, my_port, peer_port = hop
                fib.append(FibEntry(
                    net=net, masklen=30, out_port=my_port, next_hop_node=nbr,
                    next_hop_mac=plan.port_mac[(nbr, peer_port)]))

            # Longest prefix first; dedup keeps the first entry per prefix.
            seen = set()
            node.fib = []
            for entry in sorted(fib, key=lambda e: -e.masklen):
                key = (entry.net, entry.masklen)
                if key in seen:
                    continue
                seen.add(key)
                node.fib.append(entry)

    # -- lookups ---------------------------------------------------------------

    def node(self, node_id):
        return self.nodes[node_id]

    def peer_of(self, node_id, port):
        return self.link_map.get((node_id, port))

    def ce_behind(self, pe_id, port):
        """CustomerEdge attached to an access port of a PE."""
        peer = self.peer_of(pe_id, port)
        if peer and self.nodes.get(peer[0]) is not None \
                and self.nodes[peer[0]].kind == KIND_CE:
            return peer[0]
        return None

    def ce_uplink(self, ce_id):
        """(pe, pe-port, ce-port) for a CustomerEdge's single access link."""
        node = self.topology.node(ce_id)
        if node is None or node.kind != KIND_CE:
            raise InvalidArgument(f"{ce_id!r} is not a CustomerEdge", subject=ce_id)
        for link in self.topology.links:
            if link.a[0] == ce_id:
                return link.b[0], link.b[1], link.a[1]
            if link.b[0] == ce_id:
                return link.a[0], link.a[1], link.b[1]
        raise InvalidArgument(f"{ce_id!r} has no access link", subject=ce_id)

    def ce_mac(self, ce_id):
        _, _, ce_port = self.ce_uplink(ce_id)
        return self.plan.port_mac[(ce_id, ce_port)]

    # -- charging ----------------------------------------------------------------

    def _charge(self, ctx, node, amount):
        if node.node_id not in ctx.node_cost:
            base = 0.0
            if node.kind in (KIND_CR, KIND_PE):
                base = self.cost_model.tunnel_cost(self.tunneling)
            ctx.node_cost[node.node_id] = base
        ctx.node_cost[node.node_id] += amount

    def _finish(self, ctx):
        for node_id, cost in ctx.node_cost.items():
            node = self.nodes[node_id]
            node.counters.cost += cost
            if cost > node.counters.max_packet_cost:
                node.counters.max_packet_cost = cost

    # -- packet push --------------------------------------------------------------

    def inject_frame(self, node_id, port, frame, ctx=None):
        """Push a frame arriving on the wire into (node, port) to completion."""
        ctx = ctx or PacketContext()
        self._run(ctx, [("wire", node_id, port, frame)])
        return ctx

    def inject_ip(self, node_id, frame, ctx=None):
        """Push a locally originated IP packet through a node's IP engine."""
        ctx = ctx or PacketContext()
        node = self.nodes[node_id]
        node.counters.packets += 1
        node.counters.bytes += frame.wire_size
        self._run(ctx, [("ip", node_id, frame)])
        return ctx

    def send_from_ce(self, ce_id, frame, ctx=None):
        pe, pe_port, ce_port = self.ce_uplink(ce_id)
        if ctx is not None and ctx.record_trace:
            ctx.trace.append(("tx", ce_id, ce_port, frame.clone()))
        return self.inject_frame(pe, pe_port, frame, ctx=ctx)

    def _run(self, ctx, events):
        queue = deque(events)
        cm = self.cost_model
        while queue:
            ctx.steps += 1
            if ctx.steps > MAX_PACKET_STEPS:
                raise HybridNetError("packet processing did not converge", subject=ctx.flow_id)
            event = queue.popleft()
            kind = event[0]

            if kind == "wire":
                _, node_id, port, frame = event
                node = self.nodes[node_id]
                node.counters.packets += 1
                node.counters.bytes += frame.wire_size
                if ctx.record_trace:
                    ctx.trace.append(("rx", node_id, port, frame.clone()))
                if node.kind == KIND_CE:
                    ctx.delivered.append((node_id, port, frame))
                    continue
                if node.plain_router:
                    if self.tunneling not in (None, "none"):
                        self._charge(ctx, node, cm.c_ofcs_lookup)
                    queue.append(("ip", node_id, frame))
                    continue
                in_port = port
                if frame.vlan_tags:
                    sub = node.subports.get((port, frame.vlan_tags[0]))
                    if sub is not None:
                        frame.pop_vlan()
                        in_port = sub
                queue.append(("ofcs", node_id, in_port, frame))

            elif kind == "ofcs":
                _, node_id, in_port, frame = event
                node = self.nodes[node_id]
                dests, cost = node.ofcs_process(in_port, frame, cm,
                                                cache_mode=self.flow_cache_mode)
                self._charge(ctx, node, cost)
                for dest in dests:
                    if dest[0] == "port":
                        queue.append(("tx", node_id, dest[1], frame))
                    elif dest[0] == "ipEngine":
                        queue.append(("ip", node_id, frame))
                    elif dest[0] == "controller":
                        ctx.controller_frames.append((node_id, dest[1], frame.clone()))
                    elif dest[0] == "ace_encap":
                        queue.append(("ace_encap", node_id, dest[1], dest[2], frame))
                    elif dest[0] == "ace_decap":
                        queue.append(("ace_decap", node_id, dest[1], frame))
                    elif dest[0] == "bridge":
                        queue.append(("bridge", node_id, dest[1], dest[2], frame))
                    elif dest[0] == "drop":
                        ctx.drops.append((node_id, dest[1]))
                        if ctx.record_trace:
                            ctx.trace.append(("drop", node_id, dest[1], frame.clone()))
                    else:
                        raise HybridNetError(f"bad destination {dest!r}", subject=node_id)

            elif kind == "ip":
                _, node_id, frame = event
                node = self.nodes[node_id]
                self._charge(ctx, node, cm.c_ip_forward)
                outcome = node.ip_forward(frame)
                if outcome[0] == "local":
                    ctx.delivered.append((node_id, "local", frame))
                elif outcome[0] == "drop":
                    ctx.drops.append((node_id, outcome[1]))
                    if ctx.record_trace:
                        ctx.trace.append(("drop", node_id, outcome[1], frame.clone()))
                else:
                    out_port = outcome[1]
                    if node.plain_router or node.kind == KIND_CE:
                        if node.plain_router and self.tunneling not in (None, "none"):
                            self._charge(ctx, node, cm.c_ofcs_lookup)
                        queue.append(("tx", node_id, out_port, frame))
                    else:
                        queue.append(("ofcs", node_id, internal_port(out_port), frame))

            elif kind == "ace_encap":
                _, node_id, customer, local_port, frame = event
                node = self.nodes[node_id]
                encap = node.encaps[customer]
                self._charge(ctx, node, cm.c_ace_gre)
                gre = encap.encap(local_port, frame)
                binding = encap.bindings[local_port]
                queue.append(("ofcs", node_id, binding.remote_port, gre))

            elif kind == "ace_decap":
                _, node_id, customer, frame = event
                node = self.nodes[node_id]
                encap = node.encaps[customer]
                self._charge(ctx, node, cm.c_ace_gre)
                local_port, inner = encap.decap(frame)
                binding = encap.bindings[local_port]
                if binding.attach and binding.attach[0] == "bridge":
                    queue.append(("bridge", node_id, binding.attach[1],
                                  binding.attach[2], inner))
                else:
                    queue.append(("ofcs", node_id, local_port, inner))

            elif kind == "bridge":
                _, node_id, vss_id, in_port, frame = event
                node = self.nodes[node_id]
                bridge = node.bridges[vss_id]
                self._charge(ctx, node, cm.c_ofcs_lookup)
                for out_port, out_frame in bridge.forward(in_port, frame):
                    target = bridge.attach.get(out_port)
                    if target is None:
                        raise HybridNetError(
                            f"bridge port {out_port!r} is not attached", subject=vss_id)
                    if target[0] == "ace":
                        queue.append(("ace_encap", node_id, target[1], target[2],
                                      out_frame))
                    else:  # direct patch to a co-located access port
                        out = target[1]
                        if out in node.subport_rev:
                            phys, vlan = node.subport_rev[out]
                            out_frame.push_vlan(vlan)
                            out = phys
                        queue.append(("tx", node_id, out, out_frame))

            elif kind == "tx":
                _, node_id, port, frame = event
                peer = self.peer_of(node_id, port)
                if ctx.record_trace:
                    ctx.trace.append(("tx", node_id, port, frame.clone()))
                if peer is None:
                    ctx.drops.append((node_id, DROP_UNCONNECTED_PORT))
                    continue
                queue.append(("wire", peer[0], peer[1], frame))

            else:
                raise HybridNetError(f"unknown event {kind!r}", subject=ctx.flow_id)

        self._finish(ctx)
        return ctx


def compute_fibs(topology, cost_model=None):
    """Per-node forwarding tables for a valid topology, as documents."""
    net = Network(topology, cost_model=cost_model)
    out = {}
    for node_id, node in sorted(net.nodes.items()):
        entries = []
        for e in node.fib:
            entries.append({
                "prefix": f"{(e.net >> 24) & 255}.{(e.net >> 16) & 255}."
                          f"{(e.net >> 8) & 255}.{e.net & 255}/{e.masklen}",
                "local": e.local,
                "nextHopNode": e.next_hop_node,
                "outPort": e.out_port,
                "nextHopMac": e.next_hop_mac,
            })
        out[node_id] = entries
    return out
