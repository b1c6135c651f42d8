import math
from typing import NamedTuple, Tuple

from intake_ctrl.exceptions import ConfigurationError, DomainError
from intake_ctrl.plant.gas import FlowResult, GasConstants


# Scale of the surrogate flow coefficient on the choked plateau, typical for
# large butterfly and sleeve valves.
PHI_CHOKED = 0.65


class ValveUnit(NamedTuple):
    """ One control valve: geometry, actuator lag, transport delay and the
    commands still travelling through the delay line.

    history holds the commands issued during the last round(delay / dt) ticks,
    oldest first.
    """

    diameter: float
    tau: float
    delay: float
    cmd: float
    pos: float
    history: Tuple[float, ...] = ()


def make_valve(diameter, tau, delay, opening, dt):
    """ Builds a valve resting at a constant opening.

    Args:
        diameter: Valve diameter [m].
        tau: First-order time constant of the actuator [s].
        delay: Transport delay between command and actuator [s].
        opening: Initial commanded and actual opening fraction.
        dt: Step the valve will be advanced with [s]; sizes the delay line.

    Returns:
        A ValveUnit at equilibrium.
    """

    if diameter <= 0 or tau <= 0 or delay < 0:
        raise ConfigurationError(
            f'Invalid valve: diameter={diameter}, tau={tau}, delay={delay}')

    _check_fraction(opening, 'opening')

    n_delay = _delay_ticks(delay, dt)

    return ValveUnit(diameter=diameter, tau=tau, delay=delay, cmd=opening,
                     pos=opening, history=(opening,) * n_delay)


def valve_area(pos, diameter):
    """Equivalent flow area of a valve with a linear installed characteristic.
    """

    _check_fraction(pos, 'pos')

    if diameter <= 0:
        raise DomainError(f'Valve diameter must be positive, got {diameter}')

    return pos * math.pi * diameter**2 / 4


def critical_pressure_ratio(heat_ratio):

    return (2 / (heat_ratio + 1))**(heat_ratio / (heat_ratio - 1))


def _nozzle_function(ratio, heat_ratio):

    k = heat_ratio

    return math.sqrt(k / (k - 1) * (ratio**(2 / k) - ratio**((k + 1) / k)))


def flow_coefficient(p_up, p_down, heat_ratio=1.4, phi_choked=PHI_CHOKED):
    """ Flow coefficient of a valve as a function of its pressure ratio.

    Stands in for a coefficient map fitted to test data: the isentropic
    converging-nozzle function, flat at phi_choked below the critical
    pressure ratio and falling to zero as the ratio approaches one.

    Args:
        p_up: Upstream pressure [Pa].
        p_down: Downstream pressure [Pa].
        heat_ratio: Ratio of specific heats of the gas.
        phi_choked: Coefficient on the choked plateau.

    Returns:
        The dimensionless coefficient in [0, phi_choked].
    """

    if p_up <= 0:
        raise DomainError(f'Upstream pressure must be positive, got {p_up}')

    if p_down < 0:
        raise DomainError(f'Downstream pressure must be >= 0, got {p_down}')

    ratio = p_down / p_up

    if ratio >= 1:
        return 0.0

    r_crit = critical_pressure_ratio(heat_ratio)

    if ratio <= r_crit:
        return phi_choked

    return phi_choked * (_nozzle_function(ratio, heat_ratio) /
                         _nozzle_function(r_crit, heat_ratio))


def valve_mass_flow(p_up, T_up, p_down, area, gas=GasConstants(), phi=None,
                    phi_choked=PHI_CHOKED):
    """ Mass flow through a valve from the generalised flow equation
    mdot = phi * A * p * sqrt(2 / (R * T)).

    Args:
        p_up: Upstream pressure [Pa].
        T_up: Upstream temperature [K].
        p_down: Downstream pressure [Pa].
        area: Equivalent flow area [m^2].
        gas: Gas constants of the stream.
        phi: Fixed flow coefficient. If None, it is computed from the
             pressure ratio with flow_coefficient.
        phi_choked: Plateau of the surrogate coefficient.

    Returns:
        A FlowResult carrying the stream enthalpy Cp * T_up.
    """

    if area < 0:
        raise DomainError(f'Flow area must be >= 0, got {area}')

    if T_up <= 0:
        raise DomainError(f'Upstream temperature must be positive, got {T_up}')

    if phi is None:
        phi = flow_coefficient(p_up, p_down, gas.heat_ratio, phi_choked)
    elif p_down >= p_up:
        phi = 0.0

    mdot = phi * area * p_up * math.sqrt(2 / (gas.R * T_up))

    return FlowResult(mdot=mdot, h=gas.cp * T_up)


def _check_fraction(value, name):

    if not 0 <= value <= 1:
        raise DomainError(f'{name} must lie in [0, 1], got {value}')


def _delay_ticks(delay, dt):

    return int(round(delay / dt))


def valve_actuation_step(valve, cmd, dt):
    """ Advances a valve by one step of length dt.

    The command issued delay seconds ago drives the opening through a
    first-order lag, discretised exactly.

    Args:
        valve: The valve before the step.
        cmd: Opening command issued now, in [0, 1].
        dt: Step length [s].

    Returns:
        The valve after the step.
    """

    if dt <= 0:
        raise DomainError(f'Step length must be positive, got {dt}')

    if dt > valve.tau / 5:
        raise ConfigurationError(
            f'Step {dt} s is too coarse for a valve time constant of '
            f'{valve.tau} s (need dt <= tau / 5)')

    _check_fraction(cmd, 'cmd')

    history = valve.history
    n_delay = _delay_ticks(valve.delay, dt)

    # The delay line only changes length if the step length changes.
    if len(history) < n_delay:
        first = history[0] if history else valve.cmd
        history = (first,) * (n_delay - len(history)) + history
    elif len(history) > n_delay:
        history = history[len(history) - n_delay:]

    if n_delay > 0:
        delayed = history[0]
        history = history[1:] + (cmd,)
    else:
        delayed = cmd

    decay = math.exp(-dt / valve.tau)
    pos = delayed + (valve.pos - delayed) * decay
    pos = min(max(pos, 0.0), 1.0)

    return valve._replace(cmd=cmd, pos=pos, history=history)
