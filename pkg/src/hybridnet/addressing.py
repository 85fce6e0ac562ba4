"""Deterministic address and MAC assignment derived from the topology.

Loopbacks are 10.0.0.<nodeIndex>/32, point-to-point links get /30 prefixes
carved as 10.1.<linkIndex>.0/30 (.1 on side a, .2 on side b), interface MACs
are locally administered 02:00:<node-index16>:<port-index16>. Indexing is
1-based over sorted ids so regenerating from the same model is stable.
"""

from .errors import InvalidArgument
from .topo import KIND_CE, KIND_CR, KIND_CTRL, KIND_PE, _port_sort_key


def node_indices(topology):
    """1-based index per node id, over sorted ids."""
    return {n.id: i + 1 for i, n in enumerate(sorted(topology.nodes, key=lambda n: n.id))}


def link_indices(topology):
    """0-based index per link id, over sorted ids."""
    return {l.id: i for i, l in enumerate(sorted(topology.links, key=lambda l: l.id))}


def loopback_for_index(idx):
    if not (1 <= idx <= 254):
        raise InvalidArgument(f"node index {idx} outside loopback range", subject="addressing")
    return f"10.0.0.{idx}"


def link_prefix(idx):
    """/30 network address for the idx-th link."""
    if not (0 <= idx <= 255):
        raise InvalidArgument(f"link index {idx} outside prefix range", subject="addressing")
    return f"10.1.{idx}.0"


def link_addrs(idx):
    """(address of side a, address of side b) on the link's /30."""
    base = link_prefix(idx)
    stem = base.rsplit(".", 1)[0]
    return f"{stem}.1", f"{stem}.2"


def mac_for(node_idx, port_idx):
    return "02:00:{:02x}:{:02x}:{:02x}:{:02x}".format(
        (node_idx >> 8) & 0xFF, node_idx & 0xFF, (port_idx >> 8) & 0xFF, port_idx & 0xFF
    )


class AddressPlan:
    """Resolved addressing for one topology: loopbacks, link /30s, port MACs."""

    def __init__(self, topology):
        self.topology = topology
        self.node_index = node_indices(topology)
        self.link_index = link_indices(topology)

        self.loopback = {}
        for n in topology.nodes:
            self.loopback[n.id] = n.loopback or loopback_for_index(self.node_index[n.id])

        # Interface addresses keyed by (node, port); side a gets .1, b gets .2.
        self.if_addr = {}
        self.link_net = {}
        for l in topology.links:
            idx = self.link_index[l.id]
            addr_a, addr_b = link_addrs(idx)
            self.link_net[l.id] = link_prefix(idx)
            self.if_addr[(l.a[0], l.a[1])] = addr_a
            self.if_addr[(l.b[0], l.b[1])] = addr_b

        # Port MACs: explicit interfaceMacs win, otherwise derived from indices.
        self.port_mac = {}
        ports_by_node = {}
        for l in topology.links:
            for node_id, port in (l.a, l.b):
                ports_by_node.setdefault(node_id, set()).add(port)
        for n in topology.nodes:
            ports = sorted(ports_by_node.get(n.id, ()), key=_port_sort_key)
            for pi, port in enumerate(ports):
                mac = n.interface_macs.get(port) or mac_for(self.node_index[n.id], pi + 1)
                self.port_mac[(n.id, port)] = mac

    def controller_address(self, controller_id):
        """Address a controller is reachable at; its own loopback when it is a
        modelled node, otherwise the loopback of its host node."""
        node = self.topology.node(controller_id)
        if node is not None and node.kind == KIND_CTRL:
            return self.loopback[controller_id]
        return self.loopback[self.controller_host()]

    def controller_host(self):
        """The OSHI-side node hosting controller attachment: controllers have
        no data-plane links, so they are reachable via the lexicographically
        smallest CR/PE node."""
        oshi = sorted(n.id for n in self.topology.nodes if n.kind in (KIND_CR, KIND_PE))
        if not oshi:
            raise InvalidArgument("topology has no CR/PE nodes", subject="addressing")
        return oshi[0]


def vtep_ip(customer_idx, host_octet):
    if not (1 <= customer_idx <= 254):
        raise InvalidArgument(f"customer index {customer_idx} outside VTEP range",
                              subject="addressing")
    if not (1 <= host_octet <= 254):
        raise InvalidArgument(f"VTEP host octet {host_octet} outside range", subject="addressing")
    return f"10.254.{customer_idx}.{host_octet}"


def vtep_mac(customer_idx, host_octet, node_idx):
    return "02:fe:{:02x}:{:02x}:{:02x}:{:02x}".format(
        customer_idx & 0xFF, host_octet & 0xFF, (node_idx >> 8) & 0xFF, node_idx & 0xFF
    )
