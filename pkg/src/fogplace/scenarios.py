"""The four reference scenarios, the data-rate sweep and savings bookkeeping."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace

from .instances import CORE_HOPS, EDGE_SERVERS, InstanceSpec, generate, sweep_rates, with_rate
from .model import Scenario, ServiceRequest, Topology
from .optimizer import INFEASIBLE, SolveReport, build_model, layer_counts, solve
from .power import DEFAULT_POLICY, IdleAttributionPolicy, IdleRule, WirelessModel
from .profiles import LayerId, ProfileSet

BASELINE = "cloud-gp"
DISTRIBUTION_LAYERS = (LayerId.IoT, LayerId.AccessFog, LayerId.EdgeFog, LayerId.CloudDC)


def builtin_scenarios(policy: IdleAttributionPolicy = DEFAULT_POLICY) -> list[Scenario]:
    return [
        Scenario("cloud-gp", {LayerId.CloudDC}, "GP", policy),
        Scenario("cloud-sp", {LayerId.CloudDC}, "SP", policy),
        Scenario("fog", {LayerId.AccessFog, LayerId.EdgeFog}, "GP", policy, cloud_fallback=True),
        Scenario("fog-iot", {LayerId.IoT, LayerId.AccessFog, LayerId.EdgeFog}, "GP", policy, cloud_fallback=True),
    ]


def builtin_scenario(name: str, policy: IdleAttributionPolicy = DEFAULT_POLICY) -> Scenario:
    for sc in builtin_scenarios(policy):
        if sc.name == name:
            return sc
    raise KeyError(f"unknown scenario {name!r}; built-ins are {[s.name for s in builtin_scenarios()]}")


def savings(p_scenario: float, p_baseline: float) -> float:
    """Fractional power saving relative to the baseline."""
    if not p_baseline > 0:
        raise ValueError(f"baseline power must be > 0, got {p_baseline}")
    return 1.0 - p_scenario / p_baseline


@dataclass
class SweepResult:
    scenarios: list  # names, in run order
    rates: list  # Mbps
    reports: dict = field(default_factory=dict)  # (scenario, rate) -> SolveReport
    savings: dict = field(default_factory=dict)  # (scenario, rate) -> fraction or None
    distribution: dict = field(default_factory=dict)  # (scenario, rate) -> {LayerId: fraction}

    def objective(self, scenario: str, rate: float) -> float | None:
        return self.reports[scenario, rate].objective

    def average_saving(self, scenario: str) -> float | None:
        vals = [self.savings[scenario, r] for r in self.rates if self.savings.get((scenario, r)) is not None]
        return statistics.fmean(vals) if vals else None

    def max_saving(self, scenario: str) -> float | None:
        vals = [self.savings[scenario, r] for r in self.rates if self.savings.get((scenario, r)) is not None]
        return max(vals) if vals else None

    def summary(self) -> dict:
        return {
            name: {
                "max_saving": self.max_saving(name),
                "avg_saving": self.average_saving(name),
                "infeasible_rates": [r for r in self.rates if self.reports[name, r].status == INFEASIBLE],
            }
            for name in self.scenarios
        }


def run_sweep(
    spec: InstanceSpec,
    scenarios: list[Scenario] | None = None,
    rates: list[float] | None = None,
    *,
    profiles: ProfileSet | None = None,
    core_hop_count: int = CORE_HOPS,
    wireless: WirelessModel | None = None,
    edge_servers: int = EDGE_SERVERS,
    instance: tuple[Topology, list[ServiceRequest]] | None = None,
) -> SweepResult:
    """Solve every (scenario, rate) point on one shared device layout.

    Rates are in Mbps. Savings are taken against the ``cloud-gp`` baseline at
    the same rate; the baseline is solved even when not listed.
    """
    scenarios = scenarios if scenarios is not None else builtin_scenarios()
    rates = rates if rates is not None else sweep_rates()
    if instance is None:
        instance = generate(spec, profiles, core_hop_count, edge_servers)
    topology, base_requests = instance
    if wireless is None:
        wireless = WirelessModel.for_interface((profiles or ProfileSet.default()).network["wifi"])
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate scenario names in {names}")
    to_run = list(scenarios)
    if BASELINE not in names:
        policy = scenarios[0].idle_policy if scenarios else DEFAULT_POLICY
        to_run.append(builtin_scenario(BASELINE, policy))

    result = SweepResult(names, list(rates))
    reports = {}
    for rate in rates:
        requests = with_rate(base_requests, rate * 1e6, spec.ipb)
        for sc in to_run:
            reports[sc.name, rate] = solve(build_model(topology, requests, sc, wireless))
    for rate in rates:
        base = reports[BASELINE, rate]
        for name in names:
            rep = reports[name, rate]
            result.reports[name, rate] = rep
            if rep.status == INFEASIBLE or base.status == INFEASIBLE:
                result.savings[name, rate] = None
                result.distribution[name, rate] = None
                continue
            result.savings[name, rate] = savings(rep.objective, base.objective)
            counts = layer_counts(topology, rep.placement)
            n = sum(counts.values())
            result.distribution[name, rate] = {layer: counts[layer] / n if n else 0.0 for layer in DISTRIBUTION_LAYERS}
    return result


# calibration ---------------------------------------------------------------

# (scenario, statistic, target, tolerance): headline savings the default
# configuration is expected to land near
CALIBRATION_TARGETS = [
    ("fog-iot", "at_lowest_rate", 0.90, 0.10),
    ("fog", "max", 0.67, 0.10),
    ("cloud-sp", "avg", 0.57, 0.08),
]


def calibration_metrics(result: SweepResult) -> dict:
    out = {}
    for name, stat, _, _ in CALIBRATION_TARGETS:
        if name not in result.scenarios:
            continue
        if stat == "avg":
            value = result.average_saving(name)
        elif stat == "max":
            value = result.max_saving(name)
        else:
            value = result.savings.get((name, min(result.rates)))
        out[f"{name}:{stat}"] = value
    return out


def calibration_check(result: SweepResult) -> list[dict]:
    metrics = calibration_metrics(result)
    rows = []
    for name, stat, target, tol in CALIBRATION_TARGETS:
        key = f"{name}:{stat}"
        if key not in metrics:
            continue
        value = metrics[key]
        rows.append(
            {
                "metric": key,
                "measured": value,
                "target": target,
                "tolerance": tol,
                "within": value is not None and abs(value - target) <= tol,
            }
        )
    return rows


def sensitivity_variants(policy: IdleAttributionPolicy, eps_amp: float, alpha: float, core_hop_count: int) -> list[dict]:
    """One-at-a-time perturbations of the three settings the results hinge on."""
    variants = []
    for eps in sorted({0.0, eps_amp, eps_amp * 10 if eps_amp else 1e-10}):
        variants.append({"parameter": "eps_amp", "value": eps, "eps_amp": eps})
    for hops in sorted({1, core_hop_count, 2 * core_hop_count}):
        variants.append({"parameter": "core_hop_count", "value": hops, "core_hop_count": hops})
    policies = {
        "default": policy,
        "network-full": replace(policy, network={layer: IdleRule.FULL for layer in LayerId}),
        "network-shared": replace(policy, network={layer: IdleRule.SHARED for layer in LayerId}),
        "processing-shared": replace(policy, processing=IdleRule.SHARED),
    }
    for label, pol in policies.items():
        variants.append({"parameter": "idle_policy", "value": label, "policy": pol})
    for v in variants:
        v.setdefault("eps_amp", eps_amp)
        v.setdefault("core_hop_count", core_hop_count)
        v.setdefault("policy", policy)
        v["alpha"] = alpha
    return variants


def sensitivity(
    spec: InstanceSpec,
    rates: list[float],
    *,
    policy: IdleAttributionPolicy = DEFAULT_POLICY,
    eps_amp: float = 1e-11,
    alpha: float = 2.0,
    core_hop_count: int = CORE_HOPS,
    profiles: ProfileSet | None = None,
    edge_servers: int = EDGE_SERVERS,
) -> list[dict]:
    """Calibration metrics under each perturbation from :func:`sensitivity_variants`."""
    profiles = profiles or ProfileSet.default()
    rows = []
    for v in sensitivity_variants(policy, eps_amp, alpha, core_hop_count):
        wl = WirelessModel.for_interface(profiles.network["wifi"], v["eps_amp"], v["alpha"])
        res = run_sweep(
            spec,
            builtin_scenarios(v["policy"]),
            rates,
            profiles=profiles,
            core_hop_count=v["core_hop_count"],
            wireless=wl,
            edge_servers=edge_servers,
        )
        rows.append({"parameter": v["parameter"], "value": v["value"], "metrics": calibration_metrics(res)})
    return rows
