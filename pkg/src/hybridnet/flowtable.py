"""Two-table flow pipeline: match records, actions, priority-ordered rule tables.

Actions are small tagged tuples applied in order. The ethertype in a match is
compared against the frame's effective ethertype (after the VLAN stack), the
vlan field against the outermost tag, mplsLabel against the top of stack.
"""

from dataclasses import dataclass, field
from typing import Optional

from .errors import RuleConflict
from .frames import ETH_BDDP, ETH_LLDP, ETH_MPLS, ETH_MPLS_MULTICAST

# Action constructors ---------------------------------------------------------


def output(port):
    return ("output", port)


def goto_table(table_id):
    return ("goto_table", table_id)


def to_controller():
    return ("to_controller",)


def push_mpls(label, ethertype=ETH_MPLS):
    return ("push_mpls", label, ethertype)


def pop_mpls(restore_ethertype):
    return ("pop_mpls", restore_ethertype)


def set_mpls_label(label):
    return ("set_mpls_label", label)


def set_eth_src(mac):
    return ("set_eth_src", mac)


def set_eth_dst(mac):
    return ("set_eth_dst", mac)


def to_ip_engine():
    return ("to_ip_engine",)


def to_ace(customer, local_port):
    return ("to_ace", customer, local_port)


MPLS_ACTIONS = {"push_mpls", "pop_mpls", "set_mpls_label"}


@dataclass(frozen=True)
class Match:
    in_port: Optional[str] = None
    ethertype: Optional[int] = None
    vlan: Optional[int] = None
    mpls_label: Optional[int] = None
    eth_dst: Optional[str] = None

    def matches(self, frame, in_port):
        if self.in_port is not None and self.in_port != in_port:
            return False
        if self.ethertype is not None and self.ethertype != frame.effective_ethertype():
            return False
        if self.vlan is not None:
            if not frame.vlan_tags or frame.vlan_tags[0] != self.vlan:
                return False
        if self.mpls_label is not None and self.mpls_label != frame.top_label():
            return False
        if self.eth_dst is not None and self.eth_dst != frame.eth_dst:
            return False
        return True

    def to_doc(self):
        doc = {}
        if self.in_port is not None:
            doc["inPort"] = self.in_port
        if self.ethertype is not None:
            doc["ethertype"] = self.ethertype
        if self.vlan is not None:
            doc["vlan"] = self.vlan
        if self.mpls_label is not None:
            doc["mplsLabel"] = self.mpls_label
        if self.eth_dst is not None:
            doc["ethDst"] = self.eth_dst
        return doc


@dataclass
class FlowRule:
    table_id: int
    priority: int
    match: Match
    actions: list
    rule_id: str = ""
    packets: int = 0
    bytes: int = 0

    def structure(self):
        """Identity of the rule ignoring handles and counters; used to compare
        table contents against a baseline."""
        return (self.table_id, self.priority, self.match, tuple(self.actions))

    def to_doc(self):
        return {
            "ruleId": self.rule_id,
            "tableId": self.table_id,
            "priority": self.priority,
            "match": self.match.to_doc(),
            "actions": [list(a) for a in self.actions],
            "packets": self.packets,
            "bytes": self.bytes,
        }


class FlowTable:
    """Priority-ordered rule list; first match wins, insertion order breaks
    priority ties deterministically."""

    def __init__(self, table_id):
        self.table_id = table_id
        self.rules = []

    def install(self, rule):
        for existing in self.rules:
            if existing.match == rule.match:
                raise RuleConflict(
                    f"table {self.table_id} already has a rule for {rule.match}",
                    subject=existing.rule_id)
        self.rules.append(rule)
        self.rules.sort(key=lambda r: (-r.priority, r.rule_id))
        return rule

    def remove(self, rule_id):
        for i, rule in enumerate(self.rules):
            if rule.rule_id == rule_id:
                return self.rules.pop(i)
        return None

    def lookup(self, frame, in_port):
        for rule in self.rules:
            if rule.match.matches(frame, in_port):
                return rule
        return None

    def structures(self):
        return sorted((r.structure() for r in self.rules), key=repr)

    def __len__(self):
        return len(self.rules)


# Table-0 priority bands; only the relative order matters.
PRIO_COEXIST = 300   # MPLS ethertypes diverted to table 1
PRIO_DISCOVERY = 290  # LLDP/BDDP to the controller
PRIO_SERVICE = 200   # ingress classification installed at provisioning time
PRIO_BRIDGE = 100    # physical <-> internal port bridging


def bootstrap_rules(phys_ports, port_pairs, vll_multicast=True):
    """Initial table-0 contents for an OSHI node: coexistence Ethertype rules,
    discovery punts, and the per-port bridge between physical and internal
    ports. Omitting the multicast-MPLS rule suits PW-only deployments."""
    rules = []
    rules.append((PRIO_COEXIST, Match(ethertype=ETH_MPLS), [goto_table(1)]))
    if vll_multicast:
        rules.append((PRIO_COEXIST, Match(ethertype=ETH_MPLS_MULTICAST), [goto_table(1)]))
    rules.append((PRIO_DISCOVERY, Match(ethertype=ETH_LLDP), [to_controller()]))
    rules.append((PRIO_DISCOVERY, Match(ethertype=ETH_BDDP), [to_controller()]))
    for port in phys_ports:
        internal = port_pairs[port]
        rules.append((PRIO_BRIDGE, Match(in_port=port), [output(internal)]))
        rules.append((PRIO_BRIDGE, Match(in_port=internal), [output(port)]))
    return rules
