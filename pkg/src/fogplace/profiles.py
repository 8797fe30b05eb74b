"""Device profiles: processing and networking equipment ratings.

The built-in rows are the reference hardware ratings used throughout the
package (Raspberry Pi class IoT/fog nodes, GP/SP servers, GPON and metro/core
network gear).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum


class LayerId(IntEnum):
    """Architecture layers, ordered in the uplink direction."""

    IoT = 0
    AccessFog = 1
    EdgeFog = 2
    Metro = 3
    Core = 4
    CloudDC = 5

    @classmethod
    def parse(cls, value: "str | LayerId") -> "LayerId":
        if isinstance(value, LayerId):
            return value
        try:
            return cls[value]
        except KeyError:
            raise ValueError(f"unknown layer {value!r}; expected one of {[m.name for m in cls]}") from None


# layers that can host processing
PROCESSING_LAYERS = (LayerId.IoT, LayerId.AccessFog, LayerId.EdgeFog, LayerId.CloudDC)


@dataclass(frozen=True)
class ProcessingProfile:
    name: str
    cpu_capacity: float  # MIPS
    p_max: float  # W
    p_idle: float  # W
    instructions_per_hz: float
    clock: float  # GHz
    layer: LayerId

    def violations(self) -> list[str]:
        out = []
        if not self.cpu_capacity > 0:
            out.append(f"profile {self.name}: cpu_capacity {self.cpu_capacity:g} must be > 0")
        if self.p_idle < 0:
            out.append(f"profile {self.name}: p_idle {self.p_idle:g} must be >= 0")
        if self.p_idle > self.p_max:
            out.append(f"profile {self.name}: p_idle {self.p_idle:g} exceeds p_max {self.p_max:g}")
        return out


@dataclass(frozen=True)
class NetworkProfile:
    name: str
    max_bitrate: float  # bit/s
    p_max: float  # W
    p_idle: float  # W
    layer: LayerId

    def violations(self) -> list[str]:
        out = []
        if not self.max_bitrate > 0:
            out.append(f"profile {self.name}: max_bitrate {self.max_bitrate:g} must be > 0")
        if self.p_idle < 0:
            out.append(f"profile {self.name}: p_idle {self.p_idle:g} must be >= 0")
        if self.p_idle > self.p_max:
            out.append(f"profile {self.name}: p_idle {self.p_idle:g} exceeds p_max {self.p_max:g}")
        return out


RPI_ZERO = ProcessingProfile("RPi Zero", 1000.0, 3.6, 0.45, 1, 1.0, LayerId.IoT)
RPI_3 = ProcessingProfile("RPi 3", 2400.0, 12.5, 2.0, 2, 1.2, LayerId.AccessFog)
GP_SERVER = ProcessingProfile("GP Server", 10800.0, 363.0, 112.0, 4, 2.7, LayerId.EdgeFog)
SP_SERVER = ProcessingProfile("SP Server", 108000.0, 363.0, 112.0, 40, 2.7, LayerId.CloudDC)

WIFI = NetworkProfile("WiFi Interface", 0.15e9, 1.2, 0.45, LayerId.IoT)
ONU = NetworkProfile("ONU + WiFi Interface", 0.3e9, 15.0, 9.0, LayerId.AccessFog)
OLT = NetworkProfile("OLT (1-port)", 2.4e9, 48.0, 43.0, LayerId.EdgeFog)
ETHERNET_SWITCH = NetworkProfile("Ethernet Switch", 320e9, 3800.0, 3420.0, LayerId.Metro)
EDGE_ROUTER = NetworkProfile("Edge Router", 560e9, 4550.0, 4010.0, LayerId.Metro)
IP_WDM = NetworkProfile("IP/WDM Equipment", 40e9, 1150.0, 1000.0, LayerId.Core)

PROCESSING_PROFILES = {
    "rpi_zero": RPI_ZERO,
    "rpi_3": RPI_3,
    "gp_server": GP_SERVER,
    "sp_server": SP_SERVER,
}
NETWORK_PROFILES = {
    "wifi": WIFI,
    "onu": ONU,
    "olt": OLT,
    "ethernet_switch": ETHERNET_SWITCH,
    "edge_router": EDGE_ROUTER,
    "ip_wdm": IP_WDM,
}

# scenario cloud_server value -> profile key
CLOUD_SERVER_KEYS = {"GP": "gp_server", "SP": "sp_server"}


@dataclass(frozen=True)
class ProfileSet:
    """The equipment ratings a topology is built from."""

    processing: dict
    network: dict

    @classmethod
    def default(cls) -> "ProfileSet":
        return cls(dict(PROCESSING_PROFILES), dict(NETWORK_PROFILES))

    def with_overrides(self, processing: dict | None = None, network: dict | None = None) -> "ProfileSet":
        """Return a copy with per-key field overrides, e.g. ``{"onu": {"p_idle": 8.0}}``."""
        proc = dict(self.processing)
        net = dict(self.network)
        for key, fields in (processing or {}).items():
            if key not in proc:
                raise KeyError(f"unknown processing profile {key!r}")
            proc[key] = replace(proc[key], **fields)
        for key, fields in (network or {}).items():
            if key not in net:
                raise KeyError(f"unknown network profile {key!r}")
            net[key] = replace(net[key], **fields)
        return ProfileSet(proc, net)

    def violations(self) -> list[str]:
        out = []
        for p in list(self.processing.values()) + list(self.network.values()):
            out.extend(p.violations())
        return out


def core_aggregate(per_node: NetworkProfile, hop_count: int) -> NetworkProfile:
    """Collapse ``hop_count`` IP/WDM nodes into one element.

    Power scales with the hop count while the bit rate does not, so the
    aggregate's energy per bit is ``hop_count`` times the per-node value.
    """
    if hop_count < 1:
        raise ValueError(f"core hop count must be >= 1, got {hop_count}")
    return NetworkProfile(
        name=f"core-aggregate ({hop_count} x {per_node.name})",
        max_bitrate=per_node.max_bitrate,
        p_max=hop_count * per_node.p_max,
        p_idle=hop_count * per_node.p_idle,
        layer=LayerId.Core,
    )
