"""Traffic scenarios: a synchronous 1 ms tick loop injecting seeded flows and
collecting per-node cost/counter results.

Each injected packet is pushed to completion within its tick (no queuing or
latency model); per-tick injection counts come from deterministic fractional
error accumulation, so identical inputs always produce byte-identical results.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidArgument, UnprovisionedTarget
from .frames import ETH_HEADER, IP_HEADER, VLAN_TAG, ip_frame
from .jsonutil import canonical_json
from .network import PacketContext

TICKS_PER_SECOND = 1000

DROP_UNDELIVERED = "UNDELIVERED"


@dataclass
class TrafficSpec:
    flow_id: str
    rate_pps: float
    pkt_bytes: int
    duration_s: float
    src_ce: Optional[str] = None
    dst_ce: Optional[str] = None
    service_id: Optional[str] = None
    src_endpoint: int = 0
    dst_endpoint: int = 1
    broadcast: bool = False

    @classmethod
    def from_doc(cls, doc):
        return cls(
            flow_id=doc["flowId"],
            rate_pps=float(doc["ratePps"]),
            pkt_bytes=int(doc["pktBytes"]),
            duration_s=float(doc["durationS"]),
            src_ce=doc.get("srcCe"),
            dst_ce=doc.get("dstCe"),
            service_id=doc.get("service"),
            src_endpoint=int(doc.get("srcEndpoint", 0)),
            dst_endpoint=int(doc.get("dstEndpoint", 1)),
            broadcast=bool(doc.get("broadcast", False)),
        )

    def to_doc(self):
        doc = {"flowId": self.flow_id, "ratePps": self.rate_pps,
               "pktBytes": self.pkt_bytes, "durationS": self.duration_s}
        if self.service_id:
            doc["service"] = self.service_id
            doc["srcEndpoint"] = self.src_endpoint
            doc["dstEndpoint"] = self.dst_endpoint
            if self.broadcast:
                doc["broadcast"] = True
        else:
            doc["srcCe"] = self.src_ce
            doc["dstCe"] = self.dst_ce
        return doc


@dataclass
class FlowStats:
    flow_id: str
    injected: int = 0
    delivered: int = 0
    dropped: int = 0
    extra_copies: int = 0
    reasons: dict = field(default_factory=dict)

    def to_doc(self):
        return {
            "flowId": self.flow_id,
            "injected": self.injected,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "extraCopies": self.extra_copies,
            "reasonHistogram": dict(sorted(self.reasons.items())),
        }


@dataclass
class NodeStats:
    node_id: str
    packets: int = 0
    bytes: int = 0
    cost: float = 0.0
    cpu_load: float = 0.0
    saturation_estimate: Optional[float] = None

    def to_doc(self):
        return {
            "nodeId": self.node_id,
            "packets": self.packets,
            "bytes": self.bytes,
            "cost": self.cost,
            "cpuLoad": self.cpu_load,
            "saturationEstimate": self.saturation_estimate,
        }


@dataclass
class SimulationResult:
    duration_s: float
    seed: int
    nodes: dict          # node-id -> NodeStats
    flows: dict          # flow-id -> FlowStats
    samples: dict = field(default_factory=dict)  # node-id -> per-interval loads

    @property
    def injected(self):
        return sum(f.injected for f in self.flows.values())

    @property
    def delivered(self):
        return sum(f.delivered for f in self.flows.values())

    @property
    def dropped(self):
        return sum(f.dropped for f in self.flows.values())

    def to_doc(self):
        doc = {
            "durationS": self.duration_s,
            "seed": self.seed,
            "totals": {"injected": self.injected, "delivered": self.delivered,
                       "dropped": self.dropped},
            "nodes": [self.nodes[n].to_doc() for n in sorted(self.nodes)],
            "flows": [self.flows[f].to_doc() for f in sorted(self.flows)],
        }
        if self.samples:
            doc["samples"] = {n: list(v) for n, v in sorted(self.samples.items())}
        return doc

    def to_json(self):
        return canonical_json(self.to_doc())

    def to_csv(self):
        """(nodes-csv, flows-csv) with stable column and row order."""
        node_lines = ["nodeId,pkts,bytes,cpuLoad,saturationEstimate"]
        for node_id in sorted(self.nodes):
            s = self.nodes[node_id]
            sat = "" if s.saturation_estimate is None else repr(s.saturation_estimate)
            node_lines.append(f"{node_id},{s.packets},{s.bytes},{s.cpu_load!r},{sat}")
        flow_lines = ["flowId,injected,delivered,dropped,reasonHistogram"]
        for flow_id in sorted(self.flows):
            f = self.flows[flow_id]
            hist = ";".join(f"{k}:{v}" for k, v in sorted(f.reasons.items()))
            flow_lines.append(f"{flow_id},{f.injected},{f.delivered},{f.dropped},{hist}")
        return "\n".join(node_lines) + "\n", "\n".join(flow_lines) + "\n"


def _resolve_flow(network, spec):
    """Resolve a traffic spec into (src-ce, frame-builder, expected-dst-ce)."""
    if spec.service_id is None:
        if not spec.src_ce or not spec.dst_ce:
            raise InvalidArgument(f"flow {spec.flow_id!r} needs srcCe and dstCe",
                                  subject=spec.flow_id)
        src, dst = spec.src_ce, spec.dst_ce
        src_mac = network.ce_mac(src)
        pe, pe_port, _ = network.ce_uplink(src)
        pe_mac = network.plan.port_mac[(pe, pe_port)]
        src_ip = network.plan.loopback[src]
        dst_ip = network.plan.loopback[dst]
        payload_len = spec.pkt_bytes - ETH_HEADER - IP_HEADER
        if payload_len < 0:
            raise InvalidArgument("pktBytes below IP frame floor", subject=spec.flow_id)

        def build():
            return ip_frame(src_mac, pe_mac, src_ip, dst_ip,
                            payload=b"\x00" * payload_len)

        return src, build, dst

    record = network.provisioned.get(spec.service_id)
    if record is None:
        raise UnprovisionedTarget(f"service {spec.service_id!r} is not provisioned",
                                  subject=spec.flow_id)
    service = network.topology.service(spec.service_id)
    endpoints = service.endpoints
    try:
        ep_s = endpoints[spec.src_endpoint]
        ep_d = endpoints[spec.dst_endpoint]
    except IndexError:
        raise InvalidArgument(f"flow {spec.flow_id!r} endpoint index out of range",
                              subject=spec.flow_id)
    src = network.ce_behind(ep_s.pe, ep_s.port)
    dst = network.ce_behind(ep_d.pe, ep_d.port)
    src_mac = network.ce_mac(src)
    dst_mac = "ff:ff:ff:ff:ff:ff" if spec.broadcast else network.ce_mac(dst)
    src_ip = network.plan.loopback[src]
    dst_ip = network.plan.loopback[dst]
    tags = [ep_s.vlan] if ep_s.vlan is not None else []
    payload_len = spec.pkt_bytes - ETH_HEADER - IP_HEADER - VLAN_TAG * len(tags)
    if payload_len < 0:
        raise InvalidArgument("pktBytes below IP frame floor", subject=spec.flow_id)

    def build():
        return ip_frame(src_mac, dst_mac, src_ip, dst_ip,
                        payload=b"\x00" * payload_len, vlan_tags=tags)

    return src, build, dst


def run_scenario(network, traffic, *, seed=0, sample_count=None, realtime=False):
    """Run seeded flows over a provisioned network instance. Every injected
    packet ends up delivered or dropped with a reason, so the conservation
    identity holds at quiescence."""
    resolved = []
    flows = {}
    for spec in traffic:
        src, build, expect = _resolve_flow(network, spec)
        ticks = int(round(spec.duration_s * TICKS_PER_SECOND))
        resolved.append({
            "spec": spec, "src": src, "build": build, "expect": expect,
            "ticks": ticks,
            # integer micro-packets per tick: exact accumulation, no float drift
            "mu_per_tick": round(spec.rate_pps * 1000),
            "emitted": 0,
        })
        flows[spec.flow_id] = FlowStats(flow_id=spec.flow_id)

    duration = max((f["ticks"] for f in resolved), default=0) / TICKS_PER_SECOND
    total_ticks = int(round(duration * TICKS_PER_SECOND))

    before = {nid: (n.counters.packets, n.counters.bytes, n.counters.cost)
              for nid, n in network.nodes.items()}
    run_max_cost = {}

    buckets = None
    if sample_count:
        buckets = {nid: [0.0] * sample_count for nid in network.nodes}

    wall_start = time.monotonic()
    for tick in range(total_ticks):
        sample_idx = min(tick * sample_count // total_ticks, sample_count - 1) \
            if sample_count else 0
        for flow in resolved:
            if tick >= flow["ticks"]:
                continue
            due = (tick + 1) * flow["mu_per_tick"] // 1_000_000
            n = due - flow["emitted"]
            flow["emitted"] = due
            stats = flows[flow["spec"].flow_id]
            for _ in range(n):
                ctx = PacketContext(flow_id=flow["spec"].flow_id)
                network.send_from_ce(flow["src"], flow["build"](), ctx=ctx)
                stats.injected += 1
                arrived = [d for d in ctx.delivered
                           if network.nodes[d[0]].kind == "CustomerEdge"]
                hit = any(d[0] == flow["expect"] for d in arrived)
                if hit:
                    stats.delivered += 1
                    stats.extra_copies += sum(1 for d in arrived
                                              if d[0] != flow["expect"])
                elif ctx.drops:
                    stats.dropped += 1
                    reason = ctx.drops[0][1]
                    stats.reasons[reason] = stats.reasons.get(reason, 0) + 1
                else:
                    stats.dropped += 1
                    stats.reasons[DROP_UNDELIVERED] = \
                        stats.reasons.get(DROP_UNDELIVERED, 0) + 1
                for node_id, cost in ctx.node_cost.items():
                    if cost > run_max_cost.get(node_id, 0.0):
                        run_max_cost[node_id] = cost
                    if buckets is not None:
                        buckets[node_id][sample_idx] += cost
        if realtime:
            target = wall_start + (tick + 1) / TICKS_PER_SECOND
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)

    nodes = {}
    for node_id, node in network.nodes.items():
        pkts0, bytes0, cost0 = before[node_id]
        cost = node.counters.cost - cost0
        max_cost = run_max_cost.get(node_id, 0.0)
        nodes[node_id] = NodeStats(
            node_id=node_id,
            packets=node.counters.packets - pkts0,
            bytes=node.counters.bytes - bytes0,
            cost=cost,
            cpu_load=cost / duration if duration else 0.0,
            saturation_estimate=(network.cost_model.budget / max_cost
                                 if max_cost > 0 else None),
        )

    samples = {}
    if buckets is not None and duration:
        interval = duration / sample_count
        samples = {nid: [c / interval for c in series]
                   for nid, series in buckets.items()}

    return SimulationResult(duration_s=duration, seed=seed, nodes=nodes,
                            flows=flows, samples=samples)
