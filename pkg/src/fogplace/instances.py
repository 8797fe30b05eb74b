"""Seeded generation of problem instances and their JSON round trip."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .model import DISTANCE_RANGE, Node, ServiceRequest, Topology, TopologyError, validate_topology
from .power import DEFAULT_IPB, processing_demand
from .profiles import LayerId, NetworkProfile, ProcessingProfile, ProfileSet, core_aggregate

EDGE_SERVERS = 10
CORE_HOPS = 3


@dataclass(frozen=True)
class InstanceSpec:
    n_devices: int = 25
    n_onus: int = 8
    rate: float = 0.5e6  # bit/s
    distance_range: tuple = DISTANCE_RANGE
    assignment_mode: str = "balanced"  # or "random"
    seed: int = 0
    ipb: float = DEFAULT_IPB

    def __post_init__(self):
        object.__setattr__(self, "distance_range", tuple(float(x) for x in self.distance_range))

    def violations(self) -> list[str]:
        out = []
        if self.n_devices < 1:
            out.append(f"n_devices must be >= 1, got {self.n_devices}")
        if self.n_onus < 1:
            out.append(f"n_onus must be >= 1, got {self.n_onus}")
        if not self.rate > 0:
            out.append(f"rate must be > 0, got {self.rate}")
        lo, hi = self.distance_range
        if not 0 < lo <= hi:
            out.append(f"distance_range must satisfy 0 < low <= high, got [{lo:g}, {hi:g}]")
        if self.assignment_mode not in ("balanced", "random"):
            out.append(f"assignment_mode must be 'balanced' or 'random', got {self.assignment_mode!r}")
        if not self.ipb > 0:
            out.append(f"ipb must be > 0, got {self.ipb}")
        return out


def build_topology(
    onu_of_device: list[int],
    distances: list[float],
    n_onus: int,
    profiles: ProfileSet | None = None,
    core_hop_count: int = CORE_HOPS,
    edge_servers: int = EDGE_SERVERS,
) -> Topology:
    """Assemble the IoT -> ONU -> OLT -> metro -> core -> cloud-DC tree.

    The micro data centre hangs off the OLT behind its own LAN switch; the
    cloud DC root is its LAN switch with one GP and one SP server pool below.
    """
    profiles = profiles or ProfileSet.default()
    proc, net = profiles.processing, profiles.network
    nodes = [
        Node("dc-switch", LayerId.CloudDC, network=_at(net["ethernet_switch"], LayerId.CloudDC)),
        Node("cloud-gp", LayerId.CloudDC, processing=proc["gp_server"], parent="dc-switch"),
        Node("cloud-sp", LayerId.CloudDC, processing=proc["sp_server"], parent="dc-switch"),
        Node("core-aggregate", LayerId.Core, network=core_aggregate(net["ip_wdm"], core_hop_count), parent="dc-switch"),
        Node("edge-router", LayerId.Metro, network=net["edge_router"], parent="core-aggregate"),
        Node("metro-switch", LayerId.Metro, network=net["ethernet_switch"], parent="edge-router"),
        Node("olt", LayerId.EdgeFog, network=net["olt"], parent="metro-switch"),
        Node("edge-switch", LayerId.EdgeFog, network=_at(net["ethernet_switch"], LayerId.EdgeFog), parent="olt"),
        Node("edge-dc", LayerId.EdgeFog, processing=proc["gp_server"], replica_count=edge_servers, parent="edge-switch"),
    ]
    for k in range(n_onus):
        nodes.append(Node(f"onu-{k}", LayerId.AccessFog, processing=proc["rpi_3"], replica_count=1, network=net["onu"], parent="olt"))
    links = {}
    for i, (k, d) in enumerate(zip(onu_of_device, distances)):
        nodes.append(Node(f"iot-{i}", LayerId.IoT, processing=proc["rpi_zero"], replica_count=1, network=net["wifi"], parent=f"onu-{k}"))
        links[f"iot-{i}"] = float(d)
    return Topology({n.id: n for n in nodes}, links)


def _at(profile: NetworkProfile, layer: LayerId) -> NetworkProfile:
    return replace(profile, layer=layer)


def make_requests(topology: Topology, rate: float, ipb: float = DEFAULT_IPB) -> list[ServiceRequest]:
    """One homogeneous request per IoT device."""
    demand = processing_demand(rate, ipb)
    return [ServiceRequest(f"svc-{i}", dev, rate, demand) for i, dev in enumerate(topology.devices)]


def with_rate(requests: list[ServiceRequest], rate: float, ipb: float = DEFAULT_IPB) -> list[ServiceRequest]:
    demand = processing_demand(rate, ipb)
    return [replace(r, rate=rate, proc_demand=demand) for r in requests]


def generate(
    spec: InstanceSpec,
    profiles: ProfileSet | None = None,
    core_hop_count: int = CORE_HOPS,
    edge_servers: int = EDGE_SERVERS,
) -> tuple[Topology, list[ServiceRequest]]:
    problems = spec.violations()
    if problems:
        raise ValueError("invalid instance spec: " + "; ".join(problems))
    rng = np.random.default_rng(spec.seed)
    if spec.assignment_mode == "balanced":
        onu_of = [i % spec.n_onus for i in range(spec.n_devices)]
    else:
        onu_of = rng.integers(0, spec.n_onus, size=spec.n_devices).tolist()
    lo, hi = spec.distance_range
    distances = rng.uniform(lo, hi, size=spec.n_devices).tolist()
    topology = build_topology(onu_of, distances, spec.n_onus, profiles, core_hop_count, edge_servers)
    problems = validate_topology(topology, spec.distance_range)
    if problems:
        raise TopologyError("generated topology is invalid: " + "; ".join(problems))
    return topology, make_requests(topology, spec.rate, spec.ipb)


def sweep_rates(start: float = 0.5, end: float = 4.5, step: float = 0.5) -> list[float]:
    """Evenly spaced rates from ``start`` up to (not past) ``end``, in Mbps."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    if start > end:
        raise ValueError(f"start {start} exceeds end {end}")
    n = math.floor((end - start) / step + 1e-9)
    # round away float drift from repeated addition (0.1 + 0.2 style)
    return [round(start + i * step, 12) for i in range(n + 1)]


# JSON round trip --------------------------------------------------------


def topology_to_dict(topology: Topology) -> dict:
    nodes = []
    for n in topology.nodes.values():
        d = {"id": n.id, "layer": n.layer.name, "parent": n.parent}
        if n.processing is not None:
            d["processing"] = {**asdict(n.processing), "layer": n.processing.layer.name}
            d["replica_count"] = n.replica_count
        if n.network is not None:
            d["network"] = {**asdict(n.network), "layer": n.network.layer.name}
        nodes.append(d)
    return {"nodes": nodes, "wireless_links": dict(topology.wireless_links)}


def topology_from_dict(data: dict) -> Topology:
    nodes = {}
    for d in data["nodes"]:
        proc = d.get("processing")
        net = d.get("network")
        node = Node(
            id=d["id"],
            layer=LayerId.parse(d["layer"]),
            processing=ProcessingProfile(**{**proc, "layer": LayerId.parse(proc["layer"])}) if proc else None,
            replica_count=d.get("replica_count"),
            network=NetworkProfile(**{**net, "layer": LayerId.parse(net["layer"])}) if net else None,
            parent=d.get("parent"),
        )
        nodes[node.id] = node
    return Topology(nodes, {k: float(v) for k, v in data.get("wireless_links", {}).items()})


def instance_to_dict(topology: Topology, requests: list[ServiceRequest]) -> dict:
    return {
        "topology": topology_to_dict(topology),
        "requests": [asdict(r) for r in requests],
    }


def instance_from_dict(data: dict) -> tuple[Topology, list[ServiceRequest]]:
    return topology_from_dict(data["topology"]), [ServiceRequest(**r) for r in data["requests"]]
