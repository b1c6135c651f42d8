from typing import NamedTuple

import numpy as np

from intake_ctrl.exceptions import DomainError


class ValveCommandSet(NamedTuple):
    """Opening commands of (Valve_air, Valve1, Valve2)."""

    vp_air: float
    vp1: float
    vp2: float


def allocation_matrix(rho):
    """ Maps the virtual inputs (U1, U2) onto the three valves.

    U1 drives Valve_air alone; U2 is split between Valve1 (share rho) and
    Valve2 (share 1 - rho).
    """

    if not 0 <= rho <= 1:
        raise DomainError(f'rho must lie in [0, 1], got {rho}')

    return np.array([[1.0, 0.0],
                     [0.0, rho],
                     [0.0, 1.0 - rho]])


def allocate_valves(U1, U2, rho, trim):
    """Valve commands before saturation: trim plus the allocated inputs."""

    delta = allocation_matrix(rho) @ np.array([U1, U2])

    return ValveCommandSet(*(float(base + d) for base, d in zip(trim, delta)))


def saturate_and_rate_limit(cmds, prev, dt, rate_max):
    """ Clamps each command to [0, 1] and its change to rate_max * dt.

    Args:
        cmds: Requested commands.
        prev: Commands applied on the previous tick.
        dt: Step length [s].
        rate_max: Largest command rate [1/s].

    Returns:
        The applied ValveCommandSet.
    """

    if dt <= 0:
        raise DomainError(f'Step length must be positive, got {dt}')

    max_change = rate_max * dt
    limited = []

    for cmd, last in zip(cmds, prev):
        cmd = min(max(cmd, 0.0), 1.0)
        cmd = min(max(cmd, last - max_change), last + max_change)
        limited.append(cmd)

    return ValveCommandSet(*limited)


def saturation_flags(requested, applied, atol=1e-12):

    return tuple(abs(r - a) > atol for r, a in zip(requested, applied))


def command_deviation(cmds, trim):

    return np.array([c - base for c, base in zip(cmds, trim)])
