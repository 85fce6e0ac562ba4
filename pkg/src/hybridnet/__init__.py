"""hybridnet: deterministic emulator and controller for hybrid IP/SDN provider networks.

The package models provider topologies (core routers, provider edges, customer
edges), a two-table flow pipeline per node with coexisting best-effort IP and
MPLS label-switched paths, point-to-point (IP VLL, pseudowire) and multipoint
(virtual switch) services, deployment planning onto VM pools, and a calibrated
CPU cost model for forwarding experiments.
"""

__version__ = "0.1.0"
