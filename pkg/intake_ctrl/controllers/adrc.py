import logging
from collections import deque
from dataclasses import asdict, dataclass, replace

import numpy as np

from intake_ctrl.controllers.allocation import (allocate_valves,
                                                allocation_matrix,
                                                command_deviation)
from intake_ctrl.controllers.base import PressureController
from intake_ctrl.exceptions import ConfigurationError
from intake_ctrl.observer import (EsoConfig, EsoState, eso_step, make_td,
                                  td_step)
from intake_ctrl.penalty import (CoordinatorSchedule, augmented_objective,
                                 coordinator_tick)

logger = logging.getLogger(__name__)

PD_SIGN_CONVENTIONS = ('printed', 'conventional')


@dataclass(frozen=True)
class AdrcGains:
    """ Gains of the coordinated ADRC law.

    k11, k12, k13 act on V1 (proportional, derivative, coordination) and
    k21, k22, k23 on V2. b_eff1 and b_eff2 are the effective gains of the
    virtual inputs on the pressure accelerations [kPa/s^2]; c12 is the effect
    of U2 on V1. rho is the share of U2 sent to Valve1.

    pd_sign_convention 'printed' subtracts the derivative error term,
    'conventional' adds it.
    """

    k11: float = 0.25
    k12: float = 1.0
    k13: float = 0.05
    k21: float = 1.0
    k22: float = 2.0
    k23: float = 0.1
    b_eff1: float = -193.0
    b_eff2: float = 58.0
    c12: float = 0.0
    rho: float = 0.5
    pd_sign_convention: str = 'conventional'
    decouple: bool = True

    def __post_init__(self):

        gains = [self.k11, self.k12, self.k13, self.k21, self.k22, self.k23]

        if any(k < 0 for k in gains):
            raise ConfigurationError(f'ADRC gains must be >= 0, got {gains}')

        if self.b_eff1 == 0 or self.b_eff2 == 0:
            raise ConfigurationError('Effective control gains must be '
                                     'nonzero')

        if not 0 <= self.rho <= 1:
            raise ConfigurationError(f'rho must lie in [0, 1], got '
                                     f'{self.rho}')

        if self.pd_sign_convention not in PD_SIGN_CONVENTIONS:
            raise ConfigurationError(
                f'pd_sign_convention must be one of {PD_SIGN_CONVENTIONS}, '
                f'got {self.pd_sign_convention!r}')

    @property
    def derivative_sign(self):
        return -1.0 if self.pd_sign_convention == 'printed' else 1.0


def adrc_command(z_v1, z_v2, td_v1, td_v2, grad, gains):
    """ Coordinated ADRC law with disturbance compensation.

    Args:
        z_v1: Observer state of V1.
        z_v2: Observer state of V2.
        td_v1: Tracking differentiator of the V1 setpoint.
        td_v2: Tracking differentiator of the V2 setpoint.
        grad: Coordination gradient (dL/dP1, dL/dP2).
        gains: ADRC gains.

    Returns:
        The tuple (u_c1, u_c2, U1, U2) of accelerations [kPa/s^2] and
        virtual inputs [opening fraction].
    """

    s = gains.derivative_sign

    u_c1 = (gains.k11 * (td_v1.v1 - z_v1.z1)
            + s * gains.k12 * (td_v1.v2 - z_v1.z2)
            - gains.k13 * grad[0])

    u_c2 = (gains.k21 * (td_v2.v1 - z_v2.z1)
            + s * gains.k22 * (td_v2.v2 - z_v2.z2)
            - gains.k23 * grad[1])

    U1 = (u_c1 - z_v1.z3) / gains.b_eff1
    U2 = (u_c2 - z_v2.z3) / gains.b_eff2

    return u_c1, u_c2, U1, U2


def decouple(U1, U2, gains):
    """V1 input with the known effect of U2 on V1 cancelled."""

    return U1 - gains.c12 / gains.b_eff1 * U2


def effective_gains(effect, rho):
    """ Splits the valve effectiveness into the virtual-input gains.

    Args:
        effect: 2x3 sensitivity of the pressure accelerations to the valve
                commands [kPa/s^2].
        rho: Share of U2 sent to Valve1.

    Returns:
        The tuple (b_eff1, b_eff2, c12).
    """

    G = np.asarray(effect) @ allocation_matrix(rho)

    assert abs(G[1, 0]) < 1e-12, 'Valve_air cannot act on V2'

    return float(G[0, 0]), float(G[1, 1]), float(G[0, 1])


def eso_rows(gains):
    """ Input rows of the two observers over the valve command deviations.

    The rows reproduce the virtual-input model: pinv(A) recovers (U1, U2)
    from unsaturated commands. Without decoupling the V1 row leaves out the
    effect of U2, which then shows up in the V1 total disturbance.
    """

    c12 = gains.c12 if gains.decouple else 0.0
    G = np.array([[gains.b_eff1, c12], [0.0, gains.b_eff2]])
    rows = G @ np.linalg.pinv(allocation_matrix(gains.rho))

    return tuple(rows[0]), tuple(rows[1])


class AdrcController(PressureController):

    def __init__(self, gains, omegas, penalty, trim, dt, rate_max, delay,
                 initial, setpoints, td_r=10.0, td_h_factor=2.0,
                 n_grow=50, m_reset=200, meas_filter_tau=0.0):
        """ Coordinated ADRC of both chambers.

        Args:
            gains: ADRC gains.
            omegas: Observer bandwidths of V1 and V2 [rad/s].
            penalty: Penalty problem of the coordinator; its gamma is the
                     initial penalty factor.
            trim: Valve openings at the initial steady state.
            dt: Control step [s].
            rate_max: Largest valve command rate [1/s].
            delay: Valve transport delay [s]; the observers see commands as
                   they reach the actuators.
            initial: Initial pressures (P1, P2) [kPa].
            setpoints: Initial setpoints (P1_set, P2_set) [kPa].
            td_r: Speed factor of the tracking differentiators.
            td_h_factor: Filter step of the differentiators in units of dt.
            n_grow: Violating ticks per penalty-factor increase.
            m_reset: Feasible ticks before the penalty factor resets.
            meas_filter_tau: Time constant of the first-order filter between
                             the pressure measurements and the observers
                             [s]; 0 passes them through.
        """

        super().__init__(trim, dt, rate_max)

        self.gains = gains

        row1, row2 = eso_rows(gains)
        self.eso_cfgs = (EsoConfig(omega=omegas[0], b_row=row1),
                         EsoConfig(omega=omegas[1], b_row=row2))

        self.eso = (EsoState(z1=initial[0]), EsoState(z1=initial[1]))
        self.filtered = tuple(initial)
        self.filter_gain = dt / (meas_filter_tau + dt)
        self.meas_filter_tau = meas_filter_tau
        self.td = (make_td(setpoints[0], dt, td_r, td_h_factor),
                   make_td(setpoints[1], dt, td_r, td_h_factor))

        self.penalty = penalty
        self.schedule = CoordinatorSchedule(gamma0=penalty.gamma,
                                            n_grow=n_grow, m_reset=m_reset)

        n_delay = int(round(delay / dt))
        self.in_flight = deque([np.zeros(3)] * (n_delay + 1),
                               maxlen=n_delay + 1)

        logger.info(f'ADRC with b_eff=({gains.b_eff1:.2f}, '
                    f'{gains.b_eff2:.2f}), c12={gains.c12:.2f}, '
                    f'PD sign convention {gains.pd_sign_convention}')

    def compute(self, measured, setpoints):

        dt = self.dt
        u_acting = self.in_flight[0]

        if self.meas_filter_tau > 0:
            a = self.filter_gain
            self.filtered = tuple(f + a * (y - f)
                                  for f, y in zip(self.filtered, measured))
        else:
            self.filtered = tuple(measured)

        self.eso = tuple(eso_step(z, y, u_acting, cfg, dt)
                         for z, y, cfg in zip(self.eso, self.filtered,
                                              self.eso_cfgs))
        self.td = tuple(td_step(td, sp, dt)
                        for td, sp in zip(self.td, setpoints))

        z_v1, z_v2 = self.eso
        td_v1, td_v2 = self.td

        # The objective follows the shaped setpoints; the bounds stay centred
        # on the raw setpoints.
        penalty = replace(self.penalty, p1_set=td_v1.v1, p2_set=td_v2.v1,
                          c1=setpoints[0], c2=setpoints[1])

        estimates = (z_v1.z1, z_v2.z1)
        L = augmented_objective(*estimates, penalty)
        grad, penalty, self.schedule = coordinator_tick(estimates, penalty,
                                                        self.schedule)
        gamma = self.penalty.gamma
        self.penalty = penalty

        _, _, U1, U2 = adrc_command(z_v1, z_v2, td_v1, td_v2, grad,
                                    self.gains)

        if self.gains.decouple:
            U1 = decouple(U1, U2, self.gains)

        requested = allocate_valves(U1, U2, self.gains.rho, self.trim)

        signals = dict(z13=z_v1.z3, z23=z_v2.z3, grad_l1=grad[0],
                       grad_l2=grad[1], gamma=gamma, L=L)

        return requested, signals

    def record_applied(self, applied, saturated):

        self.in_flight.append(command_deviation(applied, self.trim))

    def metadata(self):

        return {
            'controller': 'adrc',
            'gains': asdict(self.gains),
            'omegas': [cfg.omega for cfg in self.eso_cfgs],
            'meas_filter_tau': self.meas_filter_tau,
            'eso_b_rows': [list(cfg.b_row) for cfg in self.eso_cfgs],
            'gamma0': self.schedule.gamma0,
            'n_grow': self.schedule.n_grow,
            'm_reset': self.schedule.m_reset,
        }
