"""Experiment runner: forwarding-mode comparison scenarios over a reference
chain topology, the sample-then-average statistic, saturation-rate math, and
deterministic result export.

The sampling protocol mirrors the measurement methodology the cost model was
calibrated against: per run, CPU load samples are collected at a fixed
cadence, a warm-up prefix is discarded, the rest averaged; means and normal
95% confidence halfwidths are then taken across independent runs.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

from .controller import Controller
from .costmodel import CostModel
from .errors import InvalidArgument
from .jsonutil import canonical_json
from .network import Network
from .scenario import TrafficSpec, run_scenario
from .steiner import lex_shortest_path
from .topo import (KIND_CE, KIND_CR, KIND_PE, AccessEndpoint, LinkSpec, NodeSpec,
                   ServiceSpec, TopologyModel, SVC_PW, SVC_VLL)

MODES = ("routerIp", "oshiIp", "oshiVll", "oshiPw")
TUNNELING = ("none", "vxlan", "openvpn")


def sample_statistic(samples, discard_prefix):
    """Mean of the samples after dropping the warm-up prefix."""
    if discard_prefix < 0 or len(samples) <= discard_prefix:
        raise InvalidArgument(
            f"need more than {discard_prefix} samples, got {len(samples)}",
            subject="samples")
    tail = samples[discard_prefix:]
    return sum(tail) / len(tail)


def per_packet_cost(cost_model: CostModel, mode, tunneling="none"):
    """CPU cost one packet charges at the monitored edge node for a given
    forwarding mode. With a tunnel underneath, a plain router still crosses
    the tunneling switch, so it loses its advantage over the hybrid node."""
    if mode not in MODES:
        raise InvalidArgument(f"unknown mode {mode!r}", subject=mode)
    if tunneling not in TUNNELING:
        raise InvalidArgument(f"unknown tunneling {tunneling!r}", subject=tunneling)
    cm = cost_model
    if mode == "routerIp":
        base = cm.c_ip_forward
        if tunneling != "none":
            base += 2 * cm.c_ofcs_lookup
    elif mode == "oshiIp":
        base = 2 * cm.c_ofcs_lookup + cm.c_ip_forward
    elif mode == "oshiVll":
        base = cm.c_ofcs_lookup + cm.c_mpls_op
    else:  # oshiPw
        base = 2 * cm.c_ofcs_lookup + cm.c_mpls_op + cm.c_ace_gre
    return base + cm.tunnel_cost(tunneling)


def saturation_rate(cost_model: CostModel, mode, tunneling="none"):
    """Theoretical CPU saturation rate in packets/second."""
    cost = per_packet_cost(cost_model, mode, tunneling)
    if cost <= 0:
        raise InvalidArgument("per-packet cost is zero", subject=mode)
    return cost_model.budget / cost


@dataclass
class ExperimentSpec:
    name: str
    mode: str
    tunneling: str = "none"
    rates: list = field(default_factory=lambda: [500, 1000, 1500, 2000, 2500])
    pkt_bytes: int = 1000
    samples_per_run: int = 20
    discard_prefix: int = 10
    runs: int = 20
    seed: int = 1
    duration_s: float = 2.0
    topology_ref: str = "builtin:chain"
    monitored_nodes: Optional[list] = None
    flow_cache: Optional[str] = None

    def __post_init__(self):
        if self.discard_prefix >= self.samples_per_run:
            raise InvalidArgument("discardPrefix must be below samplesPerRun",
                                  subject=self.name)
        if self.runs < 1:
            raise InvalidArgument("runs must be >= 1", subject=self.name)

    @classmethod
    def from_doc(cls, doc):
        scenario = doc.get("scenario", {})
        return cls(
            name=doc["name"],
            mode=scenario.get("mode", doc.get("mode", "oshiIp")),
            tunneling=scenario.get("tunneling", doc.get("tunneling", "none")),
            rates=list(doc.get("rates", [500, 1000, 1500, 2000, 2500])),
            pkt_bytes=int(doc.get("pktBytes", 1000)),
            samples_per_run=int(doc.get("samplesPerRun", 20)),
            discard_prefix=int(doc.get("discardPrefix", 10)),
            runs=int(doc.get("runs", 20)),
            seed=int(doc.get("seed", 1)),
            duration_s=float(doc.get("durationSeconds", 2.0)),
            topology_ref=doc.get("topologyRef", "builtin:chain"),
            monitored_nodes=doc.get("monitoredNodes"),
            flow_cache=doc.get("flowCache"),
        )

    def to_doc(self):
        doc = {
            "name": self.name,
            "topologyRef": self.topology_ref,
            "scenario": {"mode": self.mode, "tunneling": self.tunneling},
            "rates": list(self.rates),
            "pktBytes": self.pkt_bytes,
            "samplesPerRun": self.samples_per_run,
            "discardPrefix": self.discard_prefix,
            "runs": self.runs,
            "seed": self.seed,
            "durationSeconds": self.duration_s,
        }
        if self.monitored_nodes is not None:
            doc["monitoredNodes"] = list(self.monitored_nodes)
        if self.flow_cache is not None:
            doc["flowCache"] = self.flow_cache
        return doc


@dataclass
class MeasurementRecord:
    experiment: str
    rate: float
    node: str
    mean_cpu_load: float
    ci95_halfwidth: float
    per_run_means: list

    def to_doc(self):
        return {
            "experiment": self.experiment,
            "rate": self.rate,
            "node": self.node,
            "meanCpuLoad": self.mean_cpu_load,
            "ci95Halfwidth": self.ci95_halfwidth,
            "perRunMeans": list(self.per_run_means),
        }


def chain_topology():
    """Reference experiment topology: ce1 - pe1 - cr1 - pe2 - ce2."""
    nodes = [
        NodeSpec(id="pe1", kind=KIND_PE, label="pe1"),
        NodeSpec(id="pe2", kind=KIND_PE, label="pe2"),
        NodeSpec(id="cr1", kind=KIND_CR, label="cr1"),
        NodeSpec(id="ce1", kind=KIND_CE, label="ce1"),
        NodeSpec(id="ce2", kind=KIND_CE, label="ce2"),
    ]
    links = [
        LinkSpec(id="l1", a=("pe1", "1"), b=("cr1", "1"), kind="core"),
        LinkSpec(id="l2", a=("cr1", "2"), b=("pe2", "1"), kind="core"),
        LinkSpec(id="l3", a=("pe1", "2"), b=("ce1", "1"), kind="access"),
        LinkSpec(id="l4", a=("pe2", "2"), b=("ce2", "1"), kind="access"),
    ]
    assignment = {"pe1": "ctrl1", "pe2": "ctrl1", "cr1": "ctrl1"}
    return TopologyModel(model_name="experiment-chain", nodes=nodes, links=links,
                         controller_assignment=assignment, services=[])


def _resolve_topology(spec, topology_loader=None):
    if spec.topology_ref == "builtin:chain":
        return chain_topology()
    if topology_loader is None:
        raise InvalidArgument(f"cannot resolve topology {spec.topology_ref!r}",
                              subject=spec.name)
    return topology_loader(spec.topology_ref)


def _experiment_network(spec, topology, cost_model):
    """Fresh network (plus provisioned service and flow template) for one run."""
    network = Network(
        topology,
        cost_model=cost_model,
        plain_router=spec.mode == "routerIp",
        tunneling=spec.tunneling,
        flow_cache=spec.flow_cache,
    )
    pes = sorted(n.id for n in topology.nodes if n.kind == KIND_PE)
    if len(pes) < 2:
        raise InvalidArgument("experiment topology needs two PEs", subject=spec.name)
    pe_a, pe_b = pes[0], pes[1]
    service_id = None
    if spec.mode in ("oshiVll", "oshiPw"):
        kind = SVC_VLL if spec.mode == "oshiVll" else SVC_PW
        port_a = topology.access_ports(pe_a)[0]
        port_b = topology.access_ports(pe_b)[0]
        service = ServiceSpec(id=f"svc-{spec.mode}", kind=kind, endpoints=[
            AccessEndpoint(pe=pe_a, port=port_a),
            AccessEndpoint(pe=pe_b, port=port_b),
        ])
        topology.services.append(service)
        Controller(network).provision(service)
        service_id = service.id
    ce_a = network.ce_behind(pe_a, topology.access_ports(pe_a)[0])
    ce_b = network.ce_behind(pe_b, topology.access_ports(pe_b)[0])
    return network, pe_a, pe_b, ce_a, ce_b, service_id


def _default_monitored(topology, pe_a, pe_b):
    """The access PE plus the first core router on the forward path."""
    adj = {}
    kinds = {n.id: n.kind for n in topology.nodes}
    for link in topology.links:
        if link.kind != "core":
            continue
        adj.setdefault(link.a[0], {})[link.b[0]] = 1
        adj.setdefault(link.b[0], {})[link.a[0]] = 1
    monitored = [pe_a]
    _, path = lex_shortest_path(adj, pe_a, pe_b)
    for node_id in path:
        if kinds.get(node_id) == KIND_CR:
            monitored.append(node_id)
            break
    return monitored


def run_experiment(spec: ExperimentSpec, cost_model=None, topology_loader=None):
    """Execute runs x rates scenarios and reduce them to per-(rate, node)
    records with normal-approximation 95% confidence halfwidths."""
    cm = cost_model or CostModel.default()
    records = []
    for rate in spec.rates:
        per_node = {}
        monitored = spec.monitored_nodes
        for run in range(spec.runs):
            topology = _resolve_topology(spec, topology_loader)
            network, pe_a, pe_b, ce_a, ce_b, service_id = _experiment_network(
                spec, topology, cm)
            if monitored is None:
                monitored = _default_monitored(topology, pe_a, pe_b)
            if service_id is None:
                flow = TrafficSpec(flow_id="f1", rate_pps=rate,
                                   pkt_bytes=spec.pkt_bytes,
                                   duration_s=spec.duration_s,
                                   src_ce=ce_a, dst_ce=ce_b)
            else:
                flow = TrafficSpec(flow_id="f1", rate_pps=rate,
                                   pkt_bytes=spec.pkt_bytes,
                                   duration_s=spec.duration_s,
                                   service_id=service_id)
            result = run_scenario(network, [flow],
                                  seed=spec.seed * 100000 + run,
                                  sample_count=spec.samples_per_run)
            for node_id in monitored:
                samples = result.samples[node_id]
                mean = sample_statistic(samples, spec.discard_prefix)
                per_node.setdefault(node_id, []).append(mean)
        for node_id in monitored:
            means = per_node[node_id]
            mean = sum(means) / len(means)
            if len(means) > 1:
                var = sum((m - mean) ** 2 for m in means) / (len(means) - 1)
                ci = 1.96 * math.sqrt(var) / math.sqrt(len(means))
            else:
                ci = 0.0
            records.append(MeasurementRecord(
                experiment=spec.name, rate=rate, node=node_id,
                mean_cpu_load=mean, ci95_halfwidth=ci, per_run_means=means))
    return records


def export_results(records, fmt="json"):
    ordered = sorted(records, key=lambda r: (r.experiment, r.rate, r.node))
    if fmt == "json":
        return canonical_json([r.to_doc() for r in ordered])
    if fmt == "csv":
        lines = ["experiment,rate,node,meanCpuLoad,ci95Halfwidth"]
        for r in ordered:
            lines.append(f"{r.experiment},{r.rate!r},{r.node},"
                         f"{r.mean_cpu_load!r},{r.ci95_halfwidth!r}")
        return "\n".join(lines) + "\n"
    raise InvalidArgument(f"unknown format {fmt!r}", subject=fmt)


def import_results(doc):
    return [MeasurementRecord(
        experiment=d["experiment"], rate=d["rate"], node=d["node"],
        mean_cpu_load=d["meanCpuLoad"], ci95_halfwidth=d["ci95Halfwidth"],
        per_run_means=list(d.get("perRunMeans", []))) for d in doc]


# Named presets mirroring the calibration scenarios. Runs and durations are
# trimmed for interactive use; the engine is deterministic, so extra runs add
# no information.
PRESETS = {
    "best-effort-comparison": [
        {"name": "router-ip", "scenario": {"mode": "routerIp", "tunneling": "none"},
         "runs": 5, "durationSeconds": 0.5},
        {"name": "hybrid-ip", "scenario": {"mode": "oshiIp", "tunneling": "none"},
         "runs": 5, "durationSeconds": 0.5},
    ],
    "tunneling-comparison": [
        {"name": "no-tunnel", "scenario": {"mode": "oshiIp", "tunneling": "none"},
         "runs": 3, "durationSeconds": 0.5},
        {"name": "vxlan", "scenario": {"mode": "oshiIp", "tunneling": "vxlan"},
         "runs": 3, "durationSeconds": 0.5},
        {"name": "openvpn", "scenario": {"mode": "oshiIp", "tunneling": "openvpn"},
         "runs": 3, "durationSeconds": 0.5},
    ],
    "forwarding-modes": [
        {"name": "router-ip-vxlan", "scenario": {"mode": "routerIp", "tunneling": "vxlan"},
         "runs": 3, "durationSeconds": 0.5},
        {"name": "hybrid-ip-vxlan", "scenario": {"mode": "oshiIp", "tunneling": "vxlan"},
         "runs": 3, "durationSeconds": 0.5},
        {"name": "vll-vxlan", "scenario": {"mode": "oshiVll", "tunneling": "vxlan"},
         "runs": 3, "durationSeconds": 0.5},
    ],
    "pw-penalty": [
        {"name": "vll", "scenario": {"mode": "oshiVll", "tunneling": "vxlan"},
         "samplesPerRun": 7, "discardPrefix": 2, "runs": 1, "durationSeconds": 0.7},
        {"name": "pw", "scenario": {"mode": "oshiPw", "tunneling": "vxlan"},
         "samplesPerRun": 7, "discardPrefix": 2, "runs": 1, "durationSeconds": 0.7},
    ],
    "flow-cache": [
        {"name": "cache-on", "scenario": {"mode": "oshiVll", "tunneling": "none"},
         "flowCache": "on", "runs": 1, "durationSeconds": 1.0},
        {"name": "cache-off", "scenario": {"mode": "oshiVll", "tunneling": "none"},
         "flowCache": "off", "runs": 1, "durationSeconds": 1.0},
    ],
}


def preset_specs(name):
    if name not in PRESETS:
        raise InvalidArgument(f"unknown preset {name!r}", subject=name)
    return [ExperimentSpec.from_doc(doc) for doc in PRESETS[name]]
