from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogplace import path, validate_topology
from fogplace.model import Placement, PowerBreakdown, Scenario, ServiceRequest, TopologyError, transit_path
from fogplace.instances import build_topology
from fogplace.profiles import IP_WDM, OLT, ONU, RPI_ZERO, LayerId, ProfileSet, core_aggregate

# (MIPS, max W, idle W, instructions/Hz, GHz)
PROCESSING_TABLE = {
    "rpi_zero": (1000, 3.6, 0.45, 1, 1.0),
    "rpi_3": (2400, 12.5, 2, 2, 1.2),
    "gp_server": (10800, 363, 112, 4, 2.7),
    "sp_server": (108000, 363, 112, 40, 2.7),
}
# (Gbps, max W, idle W)
NETWORK_TABLE = {
    "wifi": (0.15, 1.2, 0.45),
    "onu": (0.3, 15, 9),
    "olt": (2.4, 48, 43),
    "ethernet_switch": (320, 3800, 3420),
    "edge_router": (560, 4550, 4010),
    "ip_wdm": (40, 1150, 1000),
}


@pytest.mark.parametrize("key", sorted(PROCESSING_TABLE))
def test_processing_profiles_golden(key):
    p = ProfileSet.default().processing[key]
    assert (p.cpu_capacity, p.p_max, p.p_idle, p.instructions_per_hz, p.clock) == PROCESSING_TABLE[key]
    assert p.cpu_capacity == pytest.approx(p.instructions_per_hz * p.clock * 1000)
    assert p.violations() == []


@pytest.mark.parametrize("key", sorted(NETWORK_TABLE))
def test_network_profiles_golden(key):
    p = ProfileSet.default().network[key]
    gbps, pmax, pidle = NETWORK_TABLE[key]
    assert p.max_bitrate == pytest.approx(gbps * 1e9, rel=1e-15)
    assert (p.p_max, p.p_idle) == (pmax, pidle)
    assert p.violations() == []


def test_profile_violations_flag_bad_values():
    assert replace(RPI_ZERO, p_idle=-1).violations()
    assert replace(ONU, p_idle=20).violations()
    assert replace(OLT, max_bitrate=0).violations()


def test_overrides_and_unknown_key():
    ps = ProfileSet.default().with_overrides({"rpi_3": {"cpu_capacity": 3000}}, {"onu": {"p_idle": 8}})
    assert ps.processing["rpi_3"].cpu_capacity == 3000
    assert ps.network["onu"].p_idle == 8
    assert ProfileSet.default().processing["rpi_3"].cpu_capacity == 2400
    with pytest.raises(KeyError):
        ProfileSet.default().with_overrides({"rpi_4": {}})


def test_core_aggregate_scales_power():
    agg = core_aggregate(IP_WDM, 3)
    assert (agg.p_max, agg.p_idle, agg.max_bitrate) == (3450, 3000, IP_WDM.max_bitrate)
    assert agg.layer is LayerId.Core


def test_layer_order():
    assert LayerId.IoT < LayerId.AccessFog < LayerId.EdgeFog < LayerId.Metro < LayerId.Core < LayerId.CloudDC
    assert LayerId.parse("EdgeFog") is LayerId.EdgeFog


def test_default_topology_is_valid(default_instance):
    topo, requests = default_instance
    assert validate_topology(topo) == []
    assert len(topo.devices) == 25
    assert topo.root == "dc-switch"
    assert topo["edge-dc"].replica_count == 10
    assert topo["cloud-gp"].replica_count is None


def test_paths(default_instance):
    topo, _ = default_instance
    assert path(topo, "iot-0", LayerId.IoT) == []
    assert path(topo, "iot-0", LayerId.AccessFog) == ["iot-0", "onu-0"]
    assert path(topo, "iot-0", LayerId.EdgeFog) == ["iot-0", "onu-0", "olt", "edge-switch"]
    assert path(topo, "iot-0", LayerId.CloudDC) == [
        "iot-0", "onu-0", "olt", "metro-switch", "edge-router", "core-aggregate", "dc-switch",
    ]


@pytest.mark.parametrize("layer", [LayerId.Metro, LayerId.Core])
def test_path_rejects_transit_layers(default_instance, layer):
    with pytest.raises(TopologyError):
        path(default_instance[0], "iot-0", layer)


def test_path_unknown_source(default_instance):
    with pytest.raises(TopologyError):
        path(default_instance[0], "iot-99", LayerId.AccessFog)


def test_missing_parent_reported(default_instance):
    topo, _ = default_instance
    nodes = dict(topo.nodes)
    nodes["iot-3"] = replace(nodes["iot-3"], parent=None)
    broken = type(topo)(nodes, topo.wireless_links)
    assert validate_topology(broken) == ["node iot-3: no parent"]


def test_distance_out_of_range_reported(default_instance):
    topo, _ = default_instance
    links = dict(topo.wireless_links)
    links["iot-7"] = 60.0
    assert validate_topology(type(topo)(topo.nodes, links)) == ["iot-7: distance 60 out of [10,50]"]


@settings(max_examples=30, deadline=None)
@given(
    n_onus=st.integers(1, 8),
    onu_seq=st.lists(st.integers(0, 7), min_size=1, max_size=20),
    hops=st.integers(1, 6),
)
def test_path_prefix_and_layer_monotonicity(n_onus, onu_seq, hops):
    onus = [k % n_onus for k in onu_seq]
    topo = build_topology(onus, [30.0] * len(onus), n_onus, core_hop_count=hops)
    assert validate_topology(topo) == []
    for dev in topo.devices:
        af = path(topo, dev, LayerId.AccessFog)
        ef = transit_path(topo, dev, LayerId.EdgeFog)
        cloud = path(topo, dev, LayerId.CloudDC)
        assert ef[: len(af)] == af
        assert cloud[: len(ef)] == ef
        for layer in (LayerId.AccessFog, LayerId.EdgeFog, LayerId.CloudDC):
            assert all(topo[el].layer <= layer for el in path(topo, dev, layer))


def test_service_request_requires_positive_rate():
    with pytest.raises(ValueError):
        ServiceRequest("s", "iot-0", 0.0, 0.0)


def test_scenario_requires_a_layer():
    with pytest.raises(ValueError):
        Scenario("empty", set())
    with pytest.raises(ValueError):
        Scenario("transit", {"Metro"})
    assert Scenario("fallback-only", set(), cloud_fallback=True).processing_layers == {LayerId.CloudDC}


def test_breakdown_grand_total():
    b = PowerBreakdown({}, 3.0, 2.0, 1.5, 3.5)
    assert b.grand_total == 5.0
    assert b.to_dict()["grand_total"] == 5.0
    assert Placement({"s": "n"}, {"n": 1}).to_dict()["assignment"] == {"s": "n"}
