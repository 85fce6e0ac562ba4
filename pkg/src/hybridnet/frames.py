"""Layered frame model: Ethernet, VLAN stack, MPLS stack, IP, GRE, UDP, payload.

Frames are mutable (the pipeline rewrites them in place per hop) but every
constructor and mutator keeps the layering invariants: the outermost header
dictates the ethertype, exactly the last MPLS entry is bottom-of-stack, and
the derived wire size follows the fixed header arithmetic.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Union

from .errors import FrameInvariantError

ETH_IP = 0x0800
ETH_ARP = 0x0806
ETH_VLAN = 0x8100
ETH_MPLS = 0x8847
ETH_MPLS_MULTICAST = 0x8848
ETH_LLDP = 0x88CC
ETH_BDDP = 0x8942

PROTO_GRE = 47
PROTO_UDP = 17

GRE_TRANSPARENT_ETHERNET = 0x6558

BROADCAST_MAC = "ff:ff:ff:ff:ff:ff"

ETH_HEADER = 14
VLAN_TAG = 4
MPLS_ENTRY = 4
IP_HEADER = 20
GRE_HEADER = 4  # keyless GRE, base header only
UDP_HEADER = 8

MAX_LABEL = 1 << 20


@dataclass
class MplsEntry:
    label: int
    tc: int = 0
    bottom_of_stack: bool = False
    ttl: int = 255


@dataclass
class IpHeader:
    src: str
    dst: str
    proto: int
    ttl: int = 64
    total_len: int = 0


@dataclass
class GreHeader:
    protocol_type: int = GRE_TRANSPARENT_ETHERNET


@dataclass
class UdpHeader:
    src_port: int = 0
    dst_port: int = 0


@dataclass
class Frame:
    eth_src: str
    eth_dst: str
    ethertype: int
    vlan_tags: List[int] = field(default_factory=list)
    # Ethertype following the VLAN stack; None when the frame is untagged.
    payload_ethertype: Optional[int] = None
    mpls_stack: List[MplsEntry] = field(default_factory=list)
    ip: Optional[IpHeader] = None
    gre: Optional[GreHeader] = None
    udp: Optional[UdpHeader] = None
    payload: Union[bytes, "Frame", None] = None

    def __post_init__(self):
        self.validate()

    # -- derived ------------------------------------------------------------

    @property
    def payload_size(self):
        if self.payload is None:
            return 0
        if isinstance(self.payload, Frame):
            return self.payload.wire_size
        return len(self.payload)

    @property
    def wire_size(self):
        return (ETH_HEADER
                + VLAN_TAG * len(self.vlan_tags)
                + MPLS_ENTRY * len(self.mpls_stack)
                + (IP_HEADER if self.ip else 0)
                + (GRE_HEADER if self.gre else 0)
                + (UDP_HEADER if self.udp else 0)
                + self.payload_size)

    def effective_ethertype(self):
        """The ethertype after the VLAN stack (what flow matches test against)."""
        return self.payload_ethertype if self.vlan_tags else self.ethertype

    def top_label(self):
        return self.mpls_stack[0].label if self.mpls_stack else None

    # -- invariants ----------------------------------------------------------

    def validate(self):
        if self.vlan_tags:
            if self.ethertype != ETH_VLAN:
                raise FrameInvariantError(
                    f"tagged frame must carry ethertype {ETH_VLAN:#06x}", subject="ethertype")
            if self.payload_ethertype is None:
                raise FrameInvariantError(
                    "tagged frame needs payloadEthertype", subject="payloadEthertype")
            for tag in self.vlan_tags:
                if not (1 <= tag <= 4094):
                    raise FrameInvariantError(f"vlan id {tag} outside 1-4094", subject="vlanTags")
            inner = self.payload_ethertype
        else:
            if self.payload_ethertype is not None:
                raise FrameInvariantError(
                    "untagged frame must not carry payloadEthertype", subject="payloadEthertype")
            inner = self.ethertype

        if self.mpls_stack:
            if inner not in (ETH_MPLS, ETH_MPLS_MULTICAST):
                raise FrameInvariantError(
                    "MPLS stack requires an MPLS ethertype", subject="ethertype")
            for i, entry in enumerate(self.mpls_stack):
                if not (0 <= entry.label < MAX_LABEL):
                    raise FrameInvariantError(f"label {entry.label} outside 20 bits",
                                              subject="mplsStack")
                expect_bos = i == len(self.mpls_stack) - 1
                if entry.bottom_of_stack != expect_bos:
                    raise FrameInvariantError(
                        "exactly the last stack entry must set bottomOfStack",
                        subject="mplsStack")
        elif self.ip is not None and inner != ETH_IP:
            raise FrameInvariantError("IP header requires ethertype 0x0800", subject="ethertype")

        if self.gre is not None:
            if self.ip is None or self.ip.proto != PROTO_GRE:
                raise FrameInvariantError("GRE requires IP proto 47", subject="gre")
        if self.udp is not None:
            if self.ip is None or self.ip.proto != PROTO_UDP:
                raise FrameInvariantError("UDP requires IP proto 17", subject="udp")
        if self.ip is not None:
            below_ip = ((GRE_HEADER if self.gre else 0)
                        + (UDP_HEADER if self.udp else 0)
                        + self.payload_size)
            if self.ip.total_len != IP_HEADER + below_ip:
                raise FrameInvariantError(
                    f"ip.totalLen {self.ip.total_len} != {IP_HEADER + below_ip}",
                    subject="ip.totalLen")

    # -- mutators used by the pipeline ----------------------------------------

    def push_vlan(self, tag):
        if self.vlan_tags:
            self.vlan_tags.insert(0, tag)
        else:
            self.payload_ethertype = self.ethertype
            self.vlan_tags = [tag]
            self.ethertype = ETH_VLAN
        self.validate()

    def pop_vlan(self):
        if not self.vlan_tags:
            raise FrameInvariantError("no VLAN tag to pop", subject="vlanTags")
        tag = self.vlan_tags.pop(0)
        if not self.vlan_tags:
            self.ethertype = self.payload_ethertype
            self.payload_ethertype = None
        self.validate()
        return tag

    def push_mpls(self, label, ethertype=ETH_MPLS, ttl=255):
        if self.vlan_tags:
            raise FrameInvariantError("MPLS push under a VLAN stack is unsupported",
                                      subject="mplsStack")
        entry = MplsEntry(label=label, bottom_of_stack=not self.mpls_stack, ttl=ttl)
        self.mpls_stack.insert(0, entry)
        self.ethertype = ethertype
        self.validate()

    def pop_mpls(self, restore_ethertype=ETH_IP):
        if not self.mpls_stack:
            raise FrameInvariantError("no MPLS entry to pop", subject="mplsStack")
        entry = self.mpls_stack.pop(0)
        if not self.mpls_stack:
            self.ethertype = restore_ethertype
        self.validate()
        return entry

    def set_top_label(self, label):
        if not self.mpls_stack:
            raise FrameInvariantError("no MPLS entry to rewrite", subject="mplsStack")
        self.mpls_stack[0].label = label
        self.validate()

    def clone(self):
        payload = self.payload.clone() if isinstance(self.payload, Frame) else self.payload
        return Frame(
            eth_src=self.eth_src,
            eth_dst=self.eth_dst,
            ethertype=self.ethertype,
            vlan_tags=list(self.vlan_tags),
            payload_ethertype=self.payload_ethertype,
            mpls_stack=[MplsEntry(e.label, e.tc, e.bottom_of_stack, e.ttl)
                        for e in self.mpls_stack],
            ip=IpHeader(self.ip.src, self.ip.dst, self.ip.proto, self.ip.ttl,
                        self.ip.total_len) if self.ip else None,
            gre=GreHeader(self.gre.protocol_type) if self.gre else None,
            udp=UdpHeader(self.udp.src_port, self.udp.dst_port) if self.udp else None,
            payload=payload,
        )


def ip_frame(eth_src, eth_dst, src, dst, *, proto=PROTO_UDP, ttl=64, payload=b"",
             vlan_tags=None):
    """Convenience constructor for an IP-over-Ethernet frame."""
    ip = IpHeader(src=src, dst=dst, proto=proto, ttl=ttl, total_len=IP_HEADER + len(payload))
    frame = Frame(eth_src=eth_src, eth_dst=eth_dst, ethertype=ETH_IP, ip=ip, payload=payload)
    for tag in reversed(vlan_tags or []):
        frame.push_vlan(tag)
    return frame


def arp_frame(eth_src, eth_dst, *, payload=b"\x00" * 28, vlan_tags=None):
    frame = Frame(eth_src=eth_src, eth_dst=eth_dst, ethertype=ETH_ARP, payload=payload)
    for tag in reversed(vlan_tags or []):
        frame.push_vlan(tag)
    return frame
