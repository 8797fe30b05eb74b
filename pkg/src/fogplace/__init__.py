"""Energy-optimal placement of IoT services over IoT, fog and cloud layers."""

from .instances import InstanceSpec, generate, sweep_rates
from .model import Placement, PowerBreakdown, Scenario, ServiceRequest, Topology, path, validate_topology
from .optimizer import brute_force, build_model, evaluate, solve
from .profiles import LayerId

__all__ = [
    "InstanceSpec",
    "LayerId",
    "Placement",
    "PowerBreakdown",
    "Scenario",
    "ServiceRequest",
    "Topology",
    "brute_force",
    "build_model",
    "evaluate",
    "generate",
    "path",
    "solve",
    "sweep_rates",
    "validate_topology",
]
