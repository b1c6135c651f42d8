import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np
from scipy.optimize import brentq

from intake_ctrl.exceptions import (ConfigurationError, DomainError,
                                    IntegrationFault, TrimError)
from intake_ctrl.plant.gas import (BoundaryConditions, ChamberFlows,
                                   ChamberState, FlowResult, GasConstants,
                                   chamber_rates, linearized_coeffs)
from intake_ctrl.plant.valves import (PHI_CHOKED, ValveUnit, make_valve,
                                      valve_actuation_step, valve_area,
                                      valve_mass_flow)

logger = logging.getLogger(__name__)

VALVE_NAMES = ('air', 'valve1', 'valve2')


@dataclass(frozen=True)
class PlantParams:
    """Fixed physical parameters of the chambers, valves and supply orifice.
    """

    v1_volume: float = 300.0
    v2_volume: float = 800.0
    gas: GasConstants = field(default_factory=GasConstants)
    diameters: Tuple[float, float, float] = (2.6, 2.6, 1.2)
    taus: Tuple[float, float, float] = (2.5, 2.5, 1.5)
    delay: float = 0.15
    supply_area: float = 3.0
    phi_choked: float = PHI_CHOKED

    def __post_init__(self):

        if self.v1_volume <= 0 or self.v2_volume <= 0:
            raise ConfigurationError('Chamber volumes must be positive')

        if self.supply_area < 0:
            raise ConfigurationError('Supply orifice area must be >= 0')

        if not 0 < self.phi_choked <= 1:
            raise ConfigurationError('phi_choked must lie in (0, 1]')

        if len(self.diameters) != 3 or len(self.taus) != 3:
            raise ConfigurationError('Need one diameter and one time '
                                     'constant per valve')


class PlantState(NamedTuple):
    """ Complete plant state. valves are ordered (Valve_air, Valve1, Valve2).
    """

    chamber1: ChamberState
    chamber2: ChamberState
    valves: Tuple[ValveUnit, ValveUnit, ValveUnit]

    @property
    def positions(self):
        return tuple(v.pos for v in self.valves)

    @property
    def commands(self):
        return tuple(v.cmd for v in self.valves)


def initial_state(p1, t1, p2, t2, openings, params, dt):
    """Plant at rest with every valve held at the given openings [SI]."""

    valves = tuple(
        make_valve(d, tau, params.delay, opening, dt)
        for d, tau, opening in zip(params.diameters, params.taus, openings))

    return PlantState(chamber1=ChamberState(p1, t1),
                      chamber2=ChamberState(p2, t2), valves=valves)


def compute_flows(chamber1, chamber2, areas, bc, params):
    """ The five streams for given chamber states and valve areas.

    Supply feeds V1 through a fixed orifice, Valve_air vents V1 to ambient,
    Valve1 and Valve2 pass gas from V1 to V2, and the engine draws mdot_out
    from V2. Flow never reverses.
    """

    gas = params.gas
    area_air, area1, area2 = areas
    P1, T1 = chamber1
    P2, T2 = chamber2

    def through(p_up, t_up, p_down, area):
        return valve_mass_flow(p_up, t_up, p_down, area, gas,
                               phi_choked=params.phi_choked)

    return ChamberFlows(
        supply=through(bc.P_in, bc.T_in, P1, params.supply_area),
        air=through(P1, T1, bc.P_amb, area_air),
        valve1=through(P1, T1, P2, area1),
        valve2=through(P1, T1, P2, area2),
        out=FlowResult(mdot=bc.mdot_out, h=gas.cp * T2))


def valve_areas(state, params):

    return tuple(valve_area(v.pos, v.diameter) for v in state.valves)


def state_flows(state, bc, params):

    return compute_flows(state.chamber1, state.chamber2,
                         valve_areas(state, params), bc, params)


def rk4_step(fn, y, dt):
    """One classical fourth-order Runge-Kutta step of dy/dt = fn(y)."""

    k1 = fn(y)
    k2 = fn(y + dt / 2 * k1)
    k3 = fn(y + dt / 2 * k2)
    k4 = fn(y + dt * k3)

    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _chamber_derivative(areas, bc, params):

    def fn(y):

        chamber1 = ChamberState(y[0], y[1])
        chamber2 = ChamberState(y[2], y[3])

        flows = compute_flows(chamber1, chamber2, areas, bc, params)

        return np.array(chamber_rates(chamber1, chamber2, flows, bc,
                                      params.gas, params.v1_volume,
                                      params.v2_volume))

    return fn


def plant_step(state, valve_cmds, bc, dt, params, t=0.0):
    """ Advances the plant by dt.

    The chambers take one RK4 step with the valve areas of the start of the
    step held fixed; the valves then advance through their delay line and
    first-order lag.

    Args:
        state: Plant state at time t.
        valve_cmds: Opening commands (Valve_air, Valve1, Valve2) in [0, 1].
        bc: Boundary conditions held over the step.
        dt: Step length [s].
        params: Plant parameters.
        t: Time of the start of the step; only used in fault reports.

    Returns:
        The plant state at t + dt.
    """

    if dt <= 0:
        raise DomainError(f'Step length must be positive, got {dt}')

    y = np.array([state.chamber1.P, state.chamber1.T,
                  state.chamber2.P, state.chamber2.T])

    fn = _chamber_derivative(valve_areas(state, params), bc, params)

    try:
        y_next = rk4_step(fn, y, dt)
    except DomainError as e:
        raise IntegrationFault(t, state, reason=str(e)) from e

    if not np.all(np.isfinite(y_next)) or np.any(y_next <= 0):
        raise IntegrationFault(t + dt, tuple(y_next))

    valves = tuple(valve_actuation_step(v, cmd, dt)
                   for v, cmd in zip(state.valves, valve_cmds))

    return PlantState(chamber1=ChamberState(y_next[0], y_next[1]),
                      chamber2=ChamberState(y_next[2], y_next[3]),
                      valves=valves)


def _solve_opening(flow_at_full, target, name):

    if target < 0:
        raise TrimError(f'{name} would need a negative flow ({target:.1f} '
                        f'kg/s) to balance the chambers')

    def residual(x):
        return flow_at_full(x) - target

    if residual(1.0) < 0:
        raise TrimError(
            f'{name} cannot pass {target:.1f} kg/s even fully open '
            f'(max {flow_at_full(1.0):.1f} kg/s)')

    if residual(0.0) >= 0:
        return 0.0

    return brentq(residual, 0.0, 1.0, xtol=1e-12)


def trim_openings(p1, p2, mdot_out, bc, params):
    """ Valve openings that hold both chambers in steady state.

    At steady state both chambers sit at the supply temperature. Valve1 and
    Valve2 share one opening that passes the engine flow, and Valve_air vents
    the supply surplus.

    Args:
        p1: Pressure of V1 [Pa].
        p2: Pressure of V2 [Pa].
        mdot_out: Engine extraction flow [kg/s].
        bc: Boundary conditions.
        params: Plant parameters.

    Returns:
        The openings (Valve_air, Valve1, Valve2).

    Raises:
        TrimError: if the flow topology admits no steady state.
    """

    if p2 >= p1:
        raise TrimError(
            f'V2 at {p2 / 1e3:.3f} kPa is not below V1 at {p1 / 1e3:.3f} kPa; '
            f'Valve1 and Valve2 cannot feed V2')

    gas = params.gas
    t_steady = bc.T_in
    d_air, d1, d2 = params.diameters

    def flow(p_up, p_down, diameter, x):
        return valve_mass_flow(p_up, t_steady, p_down,
                               valve_area(x, diameter), gas,
                               phi_choked=params.phi_choked).mdot

    supply = valve_mass_flow(bc.P_in, bc.T_in, p1, params.supply_area, gas,
                             phi_choked=params.phi_choked).mdot

    transfer = _solve_opening(
        lambda x: flow(p1, p2, d1, x) + flow(p1, p2, d2, x), mdot_out,
        'Valve1 + Valve2')

    vent = _solve_opening(lambda x: flow(p1, bc.P_amb, d_air, x),
                          supply - mdot_out, 'Valve_air')

    logger.info(f'Trim at P1={p1 / 1e3:.2f} kPa, P2={p2 / 1e3:.2f} kPa, '
                f'mdot_out={mdot_out:.1f} kg/s: air={vent:.4f}, '
                f'valve1=valve2={transfer:.4f}')

    return vent, transfer, transfer


def valve_flow_sensitivities(p1, p2, t1, bc, params):
    """ d(mdot)/d(opening) of Valve_air, Valve1 and Valve2 [kg/s per unit
    opening]. The flow is linear in area, so this is the full-open flow.
    """

    gas = params.gas
    d_air, d1, d2 = params.diameters

    def full(p_down, diameter):
        return valve_mass_flow(p1, t1, p_down, valve_area(1.0, diameter), gas,
                               phi_choked=params.phi_choked).mdot

    return (full(bc.P_amb, d_air), full(p2, d1), full(p2, d2))


def control_effectiveness(p1, p2, bc, params):
    """ Sensitivity of the chamber pressure accelerations to the valve
    commands, at a steady operating point.

    A command step moves the opening at rate 1 / tau, the opening changes
    the flow by d(mdot)/d(opening), and the flow changes the pressure rate by
    the linearised coefficients.

    Args:
        p1: Operating pressure of V1 [Pa].
        p2: Operating pressure of V2 [Pa].
        bc: Boundary conditions.
        params: Plant parameters.

    Returns:
        A 2x3 array in kPa/s^2 per unit command; rows are (V1, V2), columns
        (Valve_air, Valve1, Valve2).
    """

    t_steady = bc.T_in
    coeffs = linearized_coeffs(ChamberState(p1, t_steady),
                               ChamberState(p2, t_steady), bc, params.gas,
                               params.v1_volume, params.v2_volume)

    s_air, s1, s2 = valve_flow_sensitivities(p1, p2, t_steady, bc, params)
    tau_air, tau1, tau2 = params.taus

    effect = np.array([
        [-coeffs.a_air * s_air / tau_air, -coeffs.a1 * s1 / tau1,
         -coeffs.a2 * s2 / tau2],
        [0.0, coeffs.b1 * s1 / tau1, coeffs.b2 * s2 / tau2],
    ])

    # Pa -> kPa
    return effect / 1e3


def total_mass(state, params):

    gas = params.gas

    return (state.chamber1.mass(params.v1_volume, gas),
            state.chamber2.mass(params.v2_volume, gas))


def is_equilibrium(state, bc, params, rtol=1e-9):

    flows = state_flows(state, bc, params)
    rates = chamber_rates(state.chamber1, state.chamber2, flows, bc,
                          params.gas, params.v1_volume, params.v2_volume)

    scale = max(state.chamber1.P, state.chamber2.P)

    return all(math.isclose(r, 0.0, abs_tol=rtol * scale) for r in rates)
