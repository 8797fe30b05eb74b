"""Topology, demand and solution types shared by every other module."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .power import DEFAULT_POLICY, IdleAttributionPolicy
from .profiles import PROCESSING_LAYERS, LayerId, NetworkProfile, ProcessingProfile

DISTANCE_RANGE = (10.0, 50.0)  # metres, device to access point


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    """One site in the aggregation tree.

    A node may carry a network element, a pool of identical servers, or
    both (an ONU with on-board compute). ``replica_count=None`` marks an
    unbounded server pool.
    """

    id: str
    layer: LayerId
    processing: ProcessingProfile | None = None
    replica_count: int | None = None
    network: NetworkProfile | None = None
    parent: str | None = None

    @property
    def max_load(self) -> float:
        if self.processing is None:
            return 0.0
        if self.replica_count is None:
            return float("inf")
        return self.replica_count * self.processing.cpu_capacity


@dataclass(frozen=True)
class Topology:
    """Rooted tree of nodes plus per-device wireless link lengths."""

    nodes: Mapping[str, Node]
    wireless_links: Mapping[str, float] = field(default_factory=dict)  # IoT node id -> metres

    def __getitem__(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise TopologyError(f"unknown node {node_id!r}") from None

    @cached_property
    def devices(self) -> list[str]:
        """IoT node ids in insertion order."""
        return [n.id for n in self.nodes.values() if n.layer is LayerId.IoT]

    @cached_property
    def root(self) -> str | None:
        roots = [n.id for n in self.nodes.values() if n.parent is None]
        return roots[0] if len(roots) == 1 else None

    def ancestors(self, node_id: str) -> list[str]:
        """Node ids from ``node_id`` (inclusive) up to the root."""
        chain = [node_id]
        seen = {node_id}
        node = self[node_id]
        while node.parent is not None:
            if node.parent in seen or node.parent not in self.nodes:
                raise TopologyError(f"node {node_id}: broken chain to root at {node.parent}")
            chain.append(node.parent)
            seen.add(node.parent)
            node = self.nodes[node.parent]
        return chain

    def route(self, source: str, site: str) -> list[str]:
        """Network elements traversed by traffic from ``source`` to ``site``.

        The route climbs from the source to the lowest common ancestor and
        descends to the site. Only nodes with a network element are listed;
        an IoT node id stands for that device's wireless interface. Local
        processing (``site == source``) uses no network.
        """
        if source == site:
            return []
        up = self.ancestors(source)
        down = self.ancestors(site)
        common = set(up) & set(down)
        if not common:
            raise TopologyError(f"no route from {source} to {site}")
        up_part = []
        for n in up:
            up_part.append(n)
            if n in common:
                lca = n
                break
        down_part = list(reversed(down[: down.index(lca)]))
        return [n for n in up_part + down_part if self.nodes[n].network is not None]

    def sites(self, source: str, layer: LayerId) -> list[str]:
        """Processing nodes of ``layer`` that serve ``source``, nearest first.

        IoT devices only serve themselves and an access-fog node only serves
        the devices below it. Edge and cloud pools serve everything beneath
        their tree position, which for a single-rooted tree is everyone.
        """
        src = self[source]
        if src.layer is not LayerId.IoT:
            raise TopologyError(f"node {source} is not an IoT device")
        if layer is LayerId.IoT:
            return [source] if src.processing is not None else []
        if layer is LayerId.AccessFog:
            return [n for n in self.ancestors(source)[1:] if self.nodes[n].layer is LayerId.AccessFog and self.nodes[n].processing is not None]
        pools = [n.id for n in self.nodes.values() if n.layer is layer and n.processing is not None]
        return sorted(pools, key=lambda n: (len(self.route(source, n)), n))

    @cached_property
    def path_table(self) -> dict:
        """(device, destination layer) -> ordered network elements."""
        table = {}
        for dev in self.devices:
            for layer in PROCESSING_LAYERS:
                try:
                    table[dev, layer] = path(self, dev, layer)
                except TopologyError:
                    pass
        return table


def path(topology: Topology, source: str, dest_layer: LayerId) -> list[str]:
    """Network elements between an IoT device and the nearest processing site of ``dest_layer``."""
    dest_layer = LayerId.parse(dest_layer)
    if source not in topology.nodes:
        raise TopologyError(f"unknown source {source!r}")
    if dest_layer not in PROCESSING_LAYERS:
        raise TopologyError(f"{dest_layer.name} is a transit-only layer, not a processing destination")
    if dest_layer is LayerId.IoT:
        return []
    sites = topology.sites(source, dest_layer)
    if not sites:
        raise TopologyError(f"{source}: no {dest_layer.name} processing site")
    return topology.route(source, sites[0])


def validate_topology(topology: Topology, distance_range: tuple[float, float] | None = DISTANCE_RANGE) -> list[str]:
    """Check tree shape, replica counts, link lengths and path nesting.

    Returns human-readable violations; an empty list means the topology is
    sound. ``distance_range=None`` skips the link-length check.
    """
    problems = []
    nodes = topology.nodes
    roots = [n.id for n in nodes.values() if n.parent is None]
    for n in nodes.values():
        if n.parent is None and n.layer is not LayerId.CloudDC:
            problems.append(f"node {n.id}: no parent")
        elif n.parent is not None and n.parent not in nodes:
            problems.append(f"node {n.id}: parent {n.parent} does not exist")
        if n.processing is not None:
            if n.replica_count is None and n.layer is not LayerId.CloudDC:
                problems.append(f"node {n.id}: unbounded replica count outside the cloud DC")
            elif n.replica_count is not None and n.replica_count < 1:
                problems.append(f"node {n.id}: replica_count {n.replica_count} < 1")
            problems.extend(f"node {n.id}: {v}" for v in n.processing.violations())
        if n.network is not None:
            problems.extend(f"node {n.id}: {v}" for v in n.network.violations())
    cloud_roots = [r for r in roots if nodes[r].layer is LayerId.CloudDC]
    if len(cloud_roots) != 1:
        problems.append(f"topology: expected exactly one cloud-DC root, found {len(cloud_roots)}")
    if problems:
        # the remaining checks walk the tree and need it intact
        return problems

    for n in nodes.values():
        try:
            chain = topology.ancestors(n.id)
        except TopologyError as exc:
            problems.append(str(exc))
            continue
        for child, parent in zip(chain, chain[1:]):
            if nodes[parent].layer < nodes[child].layer:
                problems.append(f"edge {child}->{parent}: parent layer {nodes[parent].layer.name} below {nodes[child].layer.name}")

    for dev in topology.devices:
        d = topology.wireless_links.get(dev)
        if d is None:
            problems.append(f"{dev}: no wireless link distance")
        elif distance_range is not None and not distance_range[0] <= d <= distance_range[1]:
            problems.append(f"{dev}: distance {d:g} out of [{distance_range[0]:g},{distance_range[1]:g}]")
        parent = nodes[dev].parent
        if nodes[parent].layer is not LayerId.AccessFog:
            problems.append(f"{dev}: parent {parent} is not an access-fog node")
        problems.extend(_path_violations(topology, dev))
    return problems


def _path_violations(topology: Topology, dev: str) -> list[str]:
    out = []
    paths = {}
    for layer in PROCESSING_LAYERS:
        try:
            paths[layer] = path(topology, dev, layer)
        except TopologyError as exc:
            out.append(f"{dev}: {exc}")
    for layer, p in paths.items():
        for el in p:
            if topology.nodes[el].layer > layer:
                out.append(f"{dev}: path to {layer.name} crosses {el} in layer {topology.nodes[el].layer.name}")
    chain = [paths.get(LayerId.AccessFog), transit_path(topology, dev, LayerId.EdgeFog), paths.get(LayerId.CloudDC)]
    chain = [p for p in chain if p is not None]
    for shorter, longer in zip(chain, chain[1:]):
        if longer[: len(shorter)] != shorter:
            out.append(f"{dev}: path {shorter} is not a prefix of {longer}")
    return out


def transit_path(topology: Topology, source: str, layer: LayerId) -> list[str] | None:
    """Elements of ``source``'s uplink chain up to and including ``layer``.

    Unlike :func:`path`, this never descends into a data-centre LAN, so it
    is the segment that edge-bound and cloud-bound traffic share.
    """
    chain = [n for n in topology.ancestors(source) if topology.nodes[n].network is not None and topology.nodes[n].layer <= layer]
    return chain or None


@dataclass(frozen=True)
class ServiceRequest:
    id: str
    source: str
    rate: float  # bit/s
    proc_demand: float  # MIPS

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"service {self.id}: rate must be > 0, got {self.rate}")


@dataclass(frozen=True)
class Scenario:
    name: str
    allowed_layers: frozenset
    cloud_server: str = "GP"
    idle_policy: IdleAttributionPolicy = DEFAULT_POLICY
    cloud_fallback: bool = False

    def __post_init__(self):
        object.__setattr__(self, "allowed_layers", frozenset(LayerId.parse(x) for x in self.allowed_layers))
        if self.cloud_server not in ("GP", "SP"):
            raise ValueError(f"scenario {self.name}: cloud_server must be GP or SP, got {self.cloud_server!r}")
        bad = self.allowed_layers - set(PROCESSING_LAYERS)
        if bad:
            raise ValueError(f"scenario {self.name}: {sorted(b.name for b in bad)} cannot host processing")
        if not self.processing_layers:
            raise ValueError(f"scenario {self.name}: no processing layer allowed")

    @property
    def processing_layers(self) -> frozenset:
        layers = set(self.allowed_layers)
        if self.cloud_fallback:
            layers.add(LayerId.CloudDC)
        return frozenset(layers)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "allowed_layers": sorted(layer.name for layer in self.allowed_layers),
            "cloud_server": self.cloud_server,
            "cloud_fallback": self.cloud_fallback,
            "idle_policy": self.idle_policy.to_dict(),
        }


@dataclass(frozen=True)
class Placement:
    assignment: Mapping[str, str]  # service id -> processing node id
    active_replicas: Mapping[str, int]  # node id -> powered-on servers

    def to_dict(self) -> dict:
        return {"assignment": dict(self.assignment), "active_replicas": dict(self.active_replicas)}


@dataclass(frozen=True)
class PowerBreakdown:
    per_element: Mapping[str, float]
    processing_total: float
    network_total: float
    idle_total: float
    proportional_total: float

    @property
    def grand_total(self) -> float:
        return self.processing_total + self.network_total

    def to_dict(self) -> dict:
        return {
            "grand_total": self.grand_total,
            "processing_total": self.processing_total,
            "network_total": self.network_total,
            "idle_total": self.idle_total,
            "proportional_total": self.proportional_total,
            "per_element": dict(self.per_element),
        }
