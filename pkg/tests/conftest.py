import math

import pytest

from qbattery.model import ModelParams, ProtocolParams
from qbattery.operators import ThermalSpec

TWO_PI = 2.0 * math.pi
DELTA = TWO_PI * 1e6
OMEGA_M = TWO_PI * 1e12


def xi_params(xi, omega_l_frac=1.0 / 20.0, g_q_frac=1.0 / 600.0, **kw):
    """ModelParams at the benchmark frequencies for a given xi."""
    return ModelParams.from_xi(
        xi, omega_m=OMEGA_M, delta=DELTA, omega_l_rabi=DELTA * omega_l_frac,
        g_q=DELTA * g_q_frac, **kw
    )


def tbar(value):
    return ThermalSpec("tbar", value, omega_m_ref=OMEGA_M)


@pytest.fixture
def fig2_params():
    """Benchmark parameters: Delta/2pi=1 MHz, Omega_L=Delta/20, g_q=Delta/600, xi=99."""
    return xi_params(99.0)


@pytest.fixture
def selective_params():
    """Same but r = 20 (Omega_L lowered to Delta/12000): the selective regime."""
    return xi_params(99.0, omega_l_frac=1.0 / 12000.0)


@pytest.fixture
def proto1():
    return ProtocolParams(target_n=1)


@pytest.fixture
def thermal01():
    return tbar(0.1)


@pytest.fixture
def thermal04():
    return tbar(0.4)


@pytest.fixture
def thermal0():
    return ThermalSpec("absolute", 0.0)
