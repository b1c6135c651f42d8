from dataclasses import dataclass
from typing import NamedTuple

from intake_ctrl.exceptions import ConfigurationError, DomainError


@dataclass(frozen=True)
class GasConstants:
    """Calorically perfect gas; the defaults describe air."""

    R: float = 287.06
    cp: float = 1004.5

    def __post_init__(self):

        if self.R <= 0:
            raise ConfigurationError(f'Gas constant must be positive, '
                                     f'got {self.R}')

        if self.cp <= self.R:
            raise ConfigurationError(
                f'Cp ({self.cp}) must exceed R ({self.R}) so that Cp - R > 0')

    @property
    def cv(self):
        return self.cp - self.R

    @property
    def heat_ratio(self):
        return self.cp / self.cv


class ChamberState(NamedTuple):

    P: float
    T: float

    def mass(self, volume, gas):
        return self.P * volume / (gas.R * self.T)


class FlowResult(NamedTuple):
    """ A stream through one section.

    mdot: mass flow [kg/s], nonnegative in the direction of the section.
    h: specific enthalpy of the stream [J/kg].
    c: mean flow velocity [m/s].
    """

    mdot: float
    h: float
    c: float = 0.0

    @property
    def total_enthalpy_flow(self):
        return self.mdot * (self.h + 0.5 * self.c**2)


class ChamberFlows(NamedTuple):
    """The five streams of the two-chamber system."""

    supply: FlowResult
    air: FlowResult
    valve1: FlowResult
    valve2: FlowResult
    out: FlowResult


class BoundaryConditions(NamedTuple):
    """ Boundary states of the intake system, in SI units.

    The engine extraction flow mdot_out is prescribed; p_engine is only
    kept for reporting.
    """

    P_in: float = 150e3
    T_in: float = 253.0
    P_amb: float = 101.325e3
    T_amb: float = 288.0
    P_engine: float = 50e3
    Q1: float = 0.0
    Q2: float = 0.0
    mdot_out: float = 0.0


class LinearizedCoeffs(NamedTuple):
    """ Sensitivities of the chamber pressure rates to the valve flows
    [Pa/s per kg/s]. Flows through Valve1, Valve2 and Valve_air lower P1 by
    a1, a2 and a_air; flows through Valve1 and Valve2 raise P2 by b1 and b2.
    """

    a1: float
    a2: float
    a_air: float
    b1: float
    b2: float


def _check_state(state, name):

    if state.P <= 0 or state.T <= 0:
        raise DomainError(f'{name} must have positive pressure and '
                          f'temperature, got {state}')


def chamber_rates(state1, state2, flows, bc, gas, v1_volume, v2_volume):
    """ Right-hand sides of the chamber pressure and temperature equations.

    The energy bracket of each chamber collects the heat rate and the total
    enthalpy flows of its streams, less Cp * T * (net mass flow).

    Args:
        state1: State of the upstream chamber V1.
        state2: State of the engine chamber V2.
        flows: The five streams; V1 outflows carry h = Cp * T1, the engine
               extraction carries h = Cp * T2.
        bc: Boundary conditions; supplies the heat rates Q1 and Q2.
        gas: Gas constants.
        v1_volume: Volume of V1 [m^3].
        v2_volume: Volume of V2 [m^3].

    Returns:
        The tuple (dP1, dT1, dP2, dT2) in Pa/s and K/s.
    """

    _check_state(state1, 'V1')
    _check_state(state2, 'V2')

    R, cp, cv = gas.R, gas.cp, gas.cv
    P1, T1 = state1
    P2, T2 = state2

    net1 = flows.supply.mdot - (flows.air.mdot + flows.valve1.mdot +
                                flows.valve2.mdot)

    energy1 = (bc.Q1 + flows.supply.total_enthalpy_flow
               - flows.air.total_enthalpy_flow
               - flows.valve1.total_enthalpy_flow
               - flows.valve2.total_enthalpy_flow
               - cp * T1 * net1)

    dP1 = R * T1 / v1_volume * net1 + R / (v1_volume * cv) * energy1
    dT1 = R * T1 / (P1 * v1_volume * cv) * energy1

    net2 = flows.valve1.mdot + flows.valve2.mdot - flows.out.mdot

    energy2 = (bc.Q2 + flows.valve1.total_enthalpy_flow
               + flows.valve2.total_enthalpy_flow
               - flows.out.total_enthalpy_flow
               - cp * T2 * net2)

    dP2 = R * T2 / v2_volume * net2 + R / (v2_volume * cv) * energy2
    dT2 = R * T2 / (P2 * v2_volume * cv) * energy2

    return dP1, dT1, dP2, dT2


def linearized_coeffs(state1, state2, bc, gas, v1_volume, v2_volume,
                      printed=False):
    """ Sensitivities of dP1/dt and dP2/dt to the three valve flows.

    The default derives them from the pressure equations with every V1
    outflow at h = Cp * T1. With printed=True the closed forms are evaluated
    as typeset in the source model; with h = Cp * T those forms collapse to
    zero (V1) or change sign (V2), which is why they are not the default.

    Args:
        state1: State of V1.
        state2: State of V2.
        bc: Boundary conditions (supply temperature for the printed forms).
        gas: Gas constants.
        v1_volume: Volume of V1 [m^3].
        v2_volume: Volume of V2 [m^3].
        printed: Evaluate the typeset closed forms instead.

    Returns:
        LinearizedCoeffs in Pa/s per kg/s.
    """

    _check_state(state1, 'V1')
    _check_state(state2, 'V2')

    R, cp, cv = gas.R, gas.cp, gas.cv
    T1, T2 = state1.T, state2.T

    h_v1 = cp * T1
    h_in = cp * bc.T_in
    h_out = cp * T2

    if printed:
        a_out = T2 - (h_out - R * T2) / cv
        return LinearizedCoeffs(
            a1=R / v1_volume * (T1 - (h_in - R * T1) / cv),
            a2=R / v1_volume * (T1 - (h_v1 - R * T1) / cv),
            a_air=R / v1_volume * (T1 - (h_v1 - R * T1) / cv),
            b1=R / v2_volume * (a_out - h_v1 / cv),
            b2=R / v2_volume * (a_out - h_v1 / cv))

    a = R / v1_volume * (T1 + (h_v1 - cp * T1) / cv)
    b = R / v2_volume * (T2 + (h_v1 - cp * T2) / cv)

    return LinearizedCoeffs(a1=a, a2=a, a_air=a, b1=b, b2=b)
