import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fogplace.power import (
    CapacityError,
    IdleAttributionPolicy,
    IdleRule,
    WirelessModel,
    element_network_power,
    energy_per_bit,
    energy_per_instruction,
    processing_demand,
    replicas_needed,
    server_processing_power,
    wireless_tx_power,
)
from fogplace.profiles import ETHERNET_SWITCH, GP_SERVER, OLT, ONU, RPI_ZERO, SP_SERVER, WIFI, LayerId

WL = WirelessModel.for_interface(WIFI)


def test_energy_per_bit_examples():
    assert energy_per_bit(ONU) == pytest.approx(2.0e-8, rel=1e-12)
    assert energy_per_bit(OLT) == pytest.approx(5 / 2.4e9, rel=1e-12)
    flat = type(ONU)("flat", 1e9, 5.0, 5.0, LayerId.Metro)
    assert energy_per_bit(flat) == 0.0


def test_energy_per_instruction_examples():
    assert energy_per_instruction(RPI_ZERO) == pytest.approx(3.15e-9, rel=1e-12)
    assert energy_per_instruction(SP_SERVER) == pytest.approx(251 / 1.08e11, rel=1e-12)
    assert energy_per_instruction(GP_SERVER) / energy_per_instruction(SP_SERVER) == pytest.approx(10, rel=1e-12)


def test_wireless_examples():
    assert WL.e_elec == pytest.approx(5.0e-9, rel=1e-12)
    assert wireless_tx_power(WL, 0.0, 30) == 0.0
    assert wireless_tx_power(WL, 0.5e6, 50) == pytest.approx(0.015, rel=1e-12)
    assert wireless_tx_power(WL, 0.5e6, 10) == pytest.approx(0.003, rel=1e-12)


def test_wireless_model_validation():
    with pytest.raises(ValueError):
        WirelessModel(5e-9, eps_amp=-1e-12)
    with pytest.raises(ValueError):
        WirelessModel(5e-9, alpha=1.5)


@given(
    r1=st.floats(0, 1.5e8),
    r2=st.floats(0, 1.5e8),
    d1=st.floats(1, 100),
    d2=st.floats(1, 100),
)
def test_wireless_monotone(r1, r2, d1, d2):
    lo_r, hi_r = sorted((r1, r2))
    lo_d, hi_d = sorted((d1, d2))
    assert wireless_tx_power(WL, lo_r, lo_d) <= wireless_tx_power(WL, hi_r, lo_d)
    assert wireless_tx_power(WL, lo_r, lo_d) <= wireless_tx_power(WL, lo_r, hi_d)
    flat = WirelessModel(WL.e_elec, 0.0)
    assert wireless_tx_power(flat, r1, d1) == pytest.approx(WL.e_elec * r1)


def test_element_network_power_examples():
    assert element_network_power(ONU, 0.0, IdleRule.FULL) == 0.0
    assert element_network_power(ONU, 1.5e6, IdleRule.FULL) == pytest.approx(9.03, rel=1e-12)
    expected = 3420 * 1.25e7 / 3.2e11 + (380 / 320e9) * 1.25e7
    assert element_network_power(ETHERNET_SWITCH, 1.25e7, IdleRule.SHARED) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.1484, abs=1e-4)
    assert element_network_power(ONU, 1.5e6, IdleRule.NONE) == pytest.approx(0.03, rel=1e-12)


def test_element_network_power_capacity():
    with pytest.raises(CapacityError) as info:
        element_network_power(ONU, 3.1e8, IdleRule.FULL, element="onu-2")
    assert info.value.element == "onu-2"


@given(a=st.floats(0, 3e8), b=st.floats(0, 3e8))
def test_network_power_monotone_and_ordered(a, b):
    lo, hi = sorted((a, b))
    for rule in IdleRule:
        assert element_network_power(ONU, lo, rule) <= element_network_power(ONU, hi, rule)
    full, shared, none = (element_network_power(ONU, a, r) for r in (IdleRule.FULL, IdleRule.SHARED, IdleRule.NONE))
    assert full >= shared >= none >= 0


def test_server_processing_examples():
    assert server_processing_power(RPI_ZERO, 375, 1) == pytest.approx(1.63125, rel=1e-12)
    assert server_processing_power(GP_SERVER, 0, 0) == 0.0
    assert server_processing_power(GP_SERVER, 9375, 1) == pytest.approx(112 + 251 / 10.8e9 * 9.375e9, rel=1e-12)
    assert server_processing_power(GP_SERVER, 9375, 1) == pytest.approx(329.9, abs=0.05)
    with pytest.raises(CapacityError):
        server_processing_power(RPI_ZERO, 1125, 1)


def test_processing_demand_examples():
    assert processing_demand(0.5e6) == 375
    assert processing_demand(4.5e6) == 3375
    assert processing_demand(0) == 0
    with pytest.raises(ValueError):
        processing_demand(1e6, ipb=0)


@given(load=st.floats(0, 1e6), cap=st.floats(1, 1e5))
def test_replicas_needed_is_minimal(load, cap):
    n = replicas_needed(load, cap)
    if load <= 0:
        assert n == 0
    else:
        assert n * cap >= load * (1 - 1e-12)
        assert n == 1 or (n - 1) * cap < load
        assert n == max(1, math.ceil(load / cap - 1e-12))


def test_default_policy():
    pol = IdleAttributionPolicy()
    assert pol.rule_for(LayerId.IoT) is IdleRule.FULL
    assert pol.rule_for(LayerId.AccessFog) is IdleRule.FULL
    for layer in (LayerId.EdgeFog, LayerId.Metro, LayerId.Core, LayerId.CloudDC):
        assert pol.rule_for(layer) is IdleRule.SHARED
    assert pol.processing is IdleRule.FULL
    with pytest.raises(ValueError):
        IdleAttributionPolicy({LayerId.IoT: IdleRule.FULL})
