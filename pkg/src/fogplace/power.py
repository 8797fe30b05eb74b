"""Power accounting: idle + load-proportional draw of network and compute gear."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .profiles import WIFI, LayerId, NetworkProfile, ProcessingProfile

DEFAULT_IPB = 750.0  # instructions per bit
# relative slack when comparing a load against a capacity
CAPACITY_RTOL = 1e-12


class CapacityError(ValueError):
    """A network element or server is loaded beyond its rating."""

    def __init__(self, element: str, load: float, capacity: float, unit: str):
        super().__init__(f"{element}: load {load:g} {unit} exceeds capacity {capacity:g} {unit}")
        self.element = element
        self.load = load
        self.capacity = capacity


class IdleRule(str, Enum):
    FULL = "full"
    SHARED = "shared"
    NONE = "none"


def _default_network_rules() -> dict:
    return {
        LayerId.IoT: IdleRule.FULL,
        LayerId.AccessFog: IdleRule.FULL,
        LayerId.EdgeFog: IdleRule.SHARED,
        LayerId.Metro: IdleRule.SHARED,
        LayerId.Core: IdleRule.SHARED,
        LayerId.CloudDC: IdleRule.SHARED,
    }


@dataclass(frozen=True)
class IdleAttributionPolicy:
    """How much of an element's idle draw is charged to the studied traffic.

    ``network`` maps each layer to the rule for network elements in it;
    ``processing`` applies to every server replica regardless of layer.
    """

    network: dict = field(default_factory=_default_network_rules)
    processing: IdleRule = IdleRule.FULL

    def __post_init__(self):
        missing = set(LayerId) - set(self.network)
        if missing:
            raise ValueError(f"idle policy has no rule for layers {sorted(m.name for m in missing)}")

    def rule_for(self, layer: LayerId) -> IdleRule:
        return self.network[layer]

    @classmethod
    def uniform(cls, network: IdleRule, processing: IdleRule = IdleRule.FULL) -> "IdleAttributionPolicy":
        return cls({layer: network for layer in LayerId}, processing)

    def to_dict(self) -> dict:
        d = {layer.name: rule.value for layer, rule in self.network.items()}
        d["processing"] = self.processing.value
        return d


DEFAULT_POLICY = IdleAttributionPolicy()


@dataclass(frozen=True)
class WirelessModel:
    """First-order radio model: ``(e_elec + eps_amp * d**alpha)`` joules per bit."""

    e_elec: float  # J/bit
    eps_amp: float = 1e-11  # J/bit/m^alpha
    alpha: float = 2.0

    def __post_init__(self):
        if self.eps_amp < 0:
            raise ValueError(f"eps_amp must be >= 0, got {self.eps_amp}")
        if self.alpha < 2:
            raise ValueError(f"alpha must be >= 2, got {self.alpha}")

    @classmethod
    def for_interface(cls, profile: NetworkProfile = WIFI, eps_amp: float = 1e-11, alpha: float = 2.0) -> "WirelessModel":
        return cls(energy_per_bit(profile), eps_amp, alpha)


def energy_per_bit(profile: NetworkProfile) -> float:
    """Load-proportional slope of a network element in J/bit."""
    return (profile.p_max - profile.p_idle) / profile.max_bitrate


def energy_per_instruction(profile: ProcessingProfile) -> float:
    """Load-proportional slope of one server in J/instruction."""
    return (profile.p_max - profile.p_idle) / (profile.cpu_capacity * 1e6)


def processing_demand(rate: float, ipb: float = DEFAULT_IPB) -> float:
    """MIPS needed to process a ``rate`` bit/s stream at ``ipb`` instructions per bit."""
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if ipb <= 0:
        raise ValueError(f"ipb must be > 0, got {ipb}")
    return ipb * rate / 1e6


def wireless_tx_power(model: WirelessModel, rate: float, distance: float) -> float:
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    return (model.e_elec + model.eps_amp * distance**model.alpha) * rate


DEFAULT_WIRELESS = WirelessModel.for_interface()


def exceeds(load: float, capacity: float) -> bool:
    return load > capacity * (1 + CAPACITY_RTOL)


def element_network_power(profile: NetworkProfile, carried: float, rule: IdleRule, element: str | None = None) -> float:
    """Watts drawn by one network element carrying ``carried`` bit/s."""
    if carried < 0:
        raise ValueError(f"carried load must be >= 0, got {carried}")
    if exceeds(carried, profile.max_bitrate):
        raise CapacityError(element or profile.name, carried, profile.max_bitrate, "bit/s")
    return idle_network_power(profile, carried, rule) + energy_per_bit(profile) * carried


def idle_network_power(profile: NetworkProfile, carried: float, rule: IdleRule) -> float:
    rule = IdleRule(rule)
    if rule is IdleRule.FULL:
        return profile.p_idle if carried > 0 else 0.0
    if rule is IdleRule.SHARED:
        return profile.p_idle * carried / profile.max_bitrate
    return 0.0


def replicas_needed(load: float, capacity: float) -> int:
    """Smallest server count whose combined capacity covers ``load`` MIPS."""
    if load <= 0:
        return 0
    return max(1, math.ceil(load / capacity - CAPACITY_RTOL))


def server_processing_power(
    profile: ProcessingProfile,
    load: float,
    active_replicas: int,
    rule: IdleRule = IdleRule.FULL,
    element: str | None = None,
) -> float:
    """Watts drawn by ``active_replicas`` servers jointly processing ``load`` MIPS."""
    if load < 0:
        raise ValueError(f"load must be >= 0, got {load}")
    if exceeds(load, active_replicas * profile.cpu_capacity):
        raise CapacityError(element or profile.name, load, active_replicas * profile.cpu_capacity, "MIPS")
    return idle_processing_power(profile, load, active_replicas, rule) + energy_per_instruction(profile) * load * 1e6


def idle_processing_power(profile: ProcessingProfile, load: float, active_replicas: int, rule: IdleRule) -> float:
    rule = IdleRule(rule)
    if rule is IdleRule.FULL:
        return active_replicas * profile.p_idle
    if rule is IdleRule.SHARED:
        return profile.p_idle * load / profile.cpu_capacity
    return 0.0
