"""Run configuration: strict JSON schema and conversion to domain objects."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt, ValidationError, model_validator

from .instances import InstanceSpec, instance_from_dict, sweep_rates
from .model import DISTANCE_RANGE, Scenario
from .power import IdleAttributionPolicy, IdleRule, WirelessModel
from .profiles import LayerId, ProfileSet
from .scenarios import builtin_scenario

ENV_VAR = "FOGPLACE_CONFIG"

Rule = Literal["full", "shared", "none"]
ProcessingLayer = Literal["IoT", "AccessFog", "EdgeFog", "CloudDC"]
ProcessingKey = Literal["rpi_zero", "rpi_3", "gp_server", "sp_server"]
NetworkKey = Literal["wifi", "onu", "olt", "ethernet_switch", "edge_router", "ip_wdm"]


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class InstanceConfig(_Strict):
    n_devices: PositiveInt = 25
    n_onus: PositiveInt = 8
    rate_mbps: PositiveFloat = 0.5
    distance_range: tuple[PositiveFloat, PositiveFloat] = DISTANCE_RANGE
    assignment_mode: Literal["balanced", "random"] = "balanced"
    seed: int = 0
    ipb: PositiveFloat = 750.0

    @model_validator(mode="after")
    def _range_order(self):
        lo, hi = self.distance_range
        if lo > hi:
            raise ValueError(f"distance_range low {lo:g} exceeds high {hi:g}")
        return self


class WirelessConfig(_Strict):
    eps_amp: NonNegativeFloat = 1e-11
    alpha: float = Field(2.0, ge=2.0)


class IdlePolicyConfig(_Strict):
    IoT: Rule = "full"
    AccessFog: Rule = "full"
    EdgeFog: Rule = "shared"
    Metro: Rule = "shared"
    Core: Rule = "shared"
    CloudDC: Rule = "shared"
    processing: Rule = "full"

    def policy(self) -> IdleAttributionPolicy:
        return IdleAttributionPolicy({layer: IdleRule(getattr(self, layer.name)) for layer in LayerId}, IdleRule(self.processing))


class RatesConfig(_Strict):
    start_mbps: PositiveFloat = 0.5
    end_mbps: PositiveFloat = 4.5
    step_mbps: PositiveFloat = 0.5

    @model_validator(mode="after")
    def _order(self):
        if self.start_mbps > self.end_mbps:
            raise ValueError(f"start_mbps {self.start_mbps:g} exceeds end_mbps {self.end_mbps:g}")
        return self


class OutputConfig(_Strict):
    dir: str = "results"
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


class ProcessingOverride(_Strict):
    cpu_capacity: Optional[PositiveFloat] = None
    p_max: Optional[PositiveFloat] = None
    p_idle: Optional[NonNegativeFloat] = None
    instructions_per_hz: Optional[PositiveFloat] = None
    clock: Optional[PositiveFloat] = None


class NetworkOverride(_Strict):
    max_bitrate: Optional[PositiveFloat] = None
    p_max: Optional[PositiveFloat] = None
    p_idle: Optional[NonNegativeFloat] = None


class ProfilesConfig(_Strict):
    processing: dict[ProcessingKey, ProcessingOverride] = {}
    network: dict[NetworkKey, NetworkOverride] = {}


class ScenarioConfig(_Strict):
    name: str
    allowed_layers: list[ProcessingLayer]
    cloud_server: Literal["GP", "SP"] = "GP"
    cloud_fallback: bool = False


class RunConfig(_Strict):
    instance: InstanceConfig = InstanceConfig()
    wireless: WirelessConfig = WirelessConfig()
    idle_policy: IdlePolicyConfig = IdlePolicyConfig()
    core_hop_count: PositiveInt = 3
    edge_servers: PositiveInt = 10
    scenarios: list[Union[str, ScenarioConfig]] = ["cloud-gp", "cloud-sp", "fog", "fog-iot"]
    rates: RatesConfig = RatesConfig()
    output: OutputConfig = OutputConfig()
    profiles: ProfilesConfig = ProfilesConfig()
    instance_file: Optional[str] = None

    # conversions ---------------------------------------------------------

    def instance_spec(self, seed: int | None = None) -> InstanceSpec:
        i = self.instance
        return InstanceSpec(
            n_devices=i.n_devices,
            n_onus=i.n_onus,
            rate=i.rate_mbps * 1e6,
            distance_range=i.distance_range,
            assignment_mode=i.assignment_mode,
            seed=i.seed if seed is None else seed,
            ipb=i.ipb,
        )

    def profile_set(self) -> ProfileSet:
        p = self.profiles
        return ProfileSet.default().with_overrides(
            {k: v.model_dump(exclude_none=True) for k, v in p.processing.items()},
            {k: v.model_dump(exclude_none=True) for k, v in p.network.items()},
        )

    def policy(self) -> IdleAttributionPolicy:
        return self.idle_policy.policy()

    def wireless_model(self) -> WirelessModel:
        return WirelessModel.for_interface(self.profile_set().network["wifi"], self.wireless.eps_amp, self.wireless.alpha)

    def scenario_objects(self) -> list[Scenario]:
        policy = self.policy()
        out = []
        for s in self.scenarios:
            if isinstance(s, str):
                try:
                    out.append(builtin_scenario(s, policy))
                except KeyError as exc:
                    raise ConfigError(f"scenarios: {exc.args[0]}") from None
            else:
                out.append(Scenario(s.name, set(s.allowed_layers), s.cloud_server, policy, s.cloud_fallback))
        return out

    def scenario(self, name: str) -> Scenario:
        for sc in self.scenario_objects():
            if sc.name == name:
                return sc
        try:
            return builtin_scenario(name, self.policy())
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None

    def rate_list(self) -> list[float]:
        r = self.rates
        return sweep_rates(r.start_mbps, r.end_mbps, r.step_mbps)

    def load_instance(self, base: Path | None = None):
        if self.instance_file is None:
            return None
        path = Path(self.instance_file)
        if base is not None and not path.is_absolute():
            path = base / path
        return read_instance(path)

    def out_of_range_warnings(self) -> list[str]:
        lo, hi = self.instance.distance_range
        ref_lo, ref_hi = DISTANCE_RANGE
        out = []
        if lo < ref_lo or hi > ref_hi:
            out.append(f"instance.distance_range [{lo:g}, {hi:g}] lies outside the reference {ref_lo:g}-{ref_hi:g} m range")
        return out

    def physical_violations(self) -> list[str]:
        return [f"profiles: {v}" for v in self.profile_set().violations()]


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None
    problems = cfg.physical_violations()
    if problems:
        raise ConfigError("; ".join(problems))
    cfg.scenario_objects()
    return cfg


def load_config(path: str | os.PathLike | None = None) -> tuple[RunConfig, Path | None]:
    """Read a config file; falls back to ``$FOGPLACE_CONFIG``, then defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return RunConfig(), None
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data), path.parent


def read_instance(path: Path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return instance_from_dict(data["instance"] if "instance" in data else data)
    except OSError as exc:
        raise ConfigError(f"cannot read instance file {path}: {exc.strerror or exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed instance file: {exc}") from None
