import math
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np

from intake_ctrl.exceptions import ConfigurationError, DomainError

# Largest observer bandwidth times step length forward Euler is run at.
MAX_OMEGA_DT = 0.2


def eso_gains_from_bandwidth(omega):
    """Gains placing all three observer poles at -omega."""

    if omega <= 0:
        raise DomainError(f'Observer bandwidth must be positive, got {omega}')

    return 3 * omega, 3 * omega**2, omega**3


@dataclass(frozen=True)
class EsoConfig:
    """ Linear extended state observer of one chamber pressure.

    b_row maps the three valve command deviations (Valve_air, Valve1,
    Valve2) onto the second derivative of the chamber pressure [kPa/s^2 per
    unit command].
    """

    omega: float
    b_row: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    beta: Tuple[float, float, float] = field(init=False)

    def __post_init__(self):

        if len(self.b_row) != 3:
            raise ConfigurationError(f'b_row needs one entry per valve, got '
                                     f'{self.b_row}')

        object.__setattr__(self, 'b_row', tuple(float(b) for b in self.b_row))
        object.__setattr__(self, 'beta', eso_gains_from_bandwidth(self.omega))


class EsoState(NamedTuple):

    z1: float
    z2: float = 0.0
    z3: float = 0.0


class TdState(NamedTuple):

    v1: float
    v2: float = 0.0
    r: float = 10.0
    h: float = 0.02


def eso_step(s, y_meas, valve_cmds, cfg, dt):
    """ Advances the observer by one forward-Euler step.

    Args:
        s: Observer state.
        y_meas: Measured chamber pressure [kPa].
        valve_cmds: Valve command deviations from trim (Valve_air, Valve1,
                    Valve2).
        cfg: Observer configuration.
        dt: Step length [s].

    Returns:
        The observer state after the step.
    """

    if dt <= 0:
        raise DomainError(f'Step length must be positive, got {dt}')

    if dt * cfg.omega > MAX_OMEGA_DT:
        raise ConfigurationError(
            f'Observer bandwidth {cfg.omega} rad/s is too high for a step of '
            f'{dt} s (need omega * dt <= {MAX_OMEGA_DT})')

    beta1, beta2, beta3 = cfg.beta
    bu = float(np.dot(cfg.b_row, valve_cmds))

    e = s.z1 - y_meas

    return EsoState(z1=s.z1 + dt * (s.z2 - beta1 * e),
                    z2=s.z2 + dt * (s.z3 - beta2 * e + bu),
                    z3=s.z3 + dt * (-beta3 * e))


def _sign(x):

    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def _fsg(x, d):

    return (_sign(x + d) - _sign(x - d)) / 2


def fhan(x1, x2, r, h):
    """ Discrete time-optimal synthesis function: the acceleration, bounded
    by r, that brings (x1, x2) to the origin fastest on a grid of step h.
    """

    d = r * h**2
    a0 = h * x2
    y = x1 + a0
    a1 = math.sqrt(d * (d + 8 * abs(y)))
    a2 = a0 + _sign(y) * (a1 - d) / 2

    fsg_y = _fsg(y, d)
    a = (a0 + y) * fsg_y + a2 * (1 - fsg_y)

    fsg_a = _fsg(a, d)

    return -r * (a / d) * fsg_a - r * _sign(a) * (1 - fsg_a)


def td_step(s, setpoint, dt):
    """ Advances the tracking differentiator by dt.

    v1 follows the setpoint with acceleration bounded by r; v2 is its
    derivative. With h equal to dt a step is reached in finite time,
    overshooting by at most r * h**2.
    """

    if dt <= 0:
        raise DomainError(f'Step length must be positive, got {dt}')

    accel = fhan(s.v1 - setpoint, s.v2, s.r, s.h)

    return s._replace(v1=s.v1 + dt * s.v2, v2=s.v2 + dt * accel)


def make_td(setpoint, dt, r=10.0, h_factor=2.0):
    """Differentiator at rest on the setpoint, with filter step h_factor * dt.
    """

    if r <= 0 or h_factor <= 0:
        raise ConfigurationError(f'Need r > 0 and h_factor > 0, got r={r}, '
                                 f'h_factor={h_factor}')

    return TdState(v1=setpoint, v2=0.0, r=r, h=h_factor * dt)
