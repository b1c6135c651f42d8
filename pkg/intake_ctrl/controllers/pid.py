import logging
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

from scipy.optimize import brentq

from intake_ctrl.controllers.base import PressureController
from intake_ctrl.controllers.allocation import ValveCommandSet
from intake_ctrl.exceptions import ConfigurationError, DomainError
from intake_ctrl.plant.gas import ChamberState, linearized_coeffs
from intake_ctrl.plant.plant import valve_flow_sensitivities

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PidGains:
    """ One positional PID loop. Errors in kPa, output in opening fraction.

    derivative_filter is N of the first-order derivative filter with time
    constant kd / (kp * N); 0 takes the raw difference. reverse marks a loop
    whose valve lowers the pressure when opened.
    """

    kp: float
    ki: float
    kd: float
    integral_limit: float = 100.0
    reverse: bool = False
    derivative_filter: float = 10.0

    def __post_init__(self):

        if self.integral_limit <= 0:
            raise ConfigurationError(f'integral_limit must be positive, got '
                                     f'{self.integral_limit}')

        if min(self.kp, self.ki, self.kd) < 0:
            raise ConfigurationError(
                f'PID gains must be >= 0, got ({self.kp}, {self.ki}, '
                f'{self.kd}); use reverse for reverse-acting loops')

        if self.derivative_filter < 0:
            raise ConfigurationError(f'derivative_filter must be >= 0, got '
                                     f'{self.derivative_filter}')

    @property
    def filter_time(self):
        """Derivative filter time constant [s]; 0 without filtering."""

        if self.derivative_filter == 0 or self.kp == 0 or self.kd == 0:
            return 0.0

        return self.kd / (self.kp * self.derivative_filter)


class PidLoopState(NamedTuple):

    integral: float = 0.0
    prev_measurement: Optional[float] = None
    saturated: bool = False
    derivative: float = 0.0


def pid_step(state, setpoint, measurement, gains, dt, trim):
    """ One step of a positional PID loop around a trim opening.

    The derivative acts on the measurement and passes a first-order filter.
    The integral is clamped to integral_limit and stops accumulating while
    the output saturates.

    Args:
        state: Loop state.
        setpoint: Setpoint [kPa].
        measurement: Measured pressure [kPa].
        gains: Loop gains.
        dt: Step length [s].
        trim: Opening the loop adds its action to.

    Returns:
        The pair (command, state).
    """

    if dt <= 0:
        raise DomainError(f'Step length must be positive, got {dt}')

    error = setpoint - measurement

    if state.prev_measurement is None:
        derivative = 0.0
    else:
        derivative = -(measurement - state.prev_measurement) / dt
        t_f = gains.filter_time
        if t_f > 0:
            derivative = (state.derivative
                          + dt / (t_f + dt) * (derivative - state.derivative))

    limit = gains.integral_limit

    if state.saturated:
        integral = state.integral
    else:
        integral = min(max(state.integral + error * dt, -limit), limit)

    action = -1.0 if gains.reverse else 1.0

    def output(i):
        return trim + action * (gains.kp * error + gains.ki * i +
                                gains.kd * derivative)

    unclamped = output(integral)
    command = min(max(unclamped, 0.0), 1.0)
    saturated = command != unclamped

    if saturated:
        integral = state.integral
        command = min(max(output(integral), 0.0), 1.0)

    return command, PidLoopState(integral=integral,
                                 prev_measurement=measurement,
                                 saturated=saturated, derivative=derivative)


def ultimate_point(gain, tau, delay):
    """ Ultimate gain and period of an integrator with first-order lag and
    transport delay, K exp(-delay s) / (s (tau s + 1)).

    Returns:
        The pair (ultimate gain, ultimate period [s]).
    """

    if gain <= 0 or tau <= 0:
        raise ConfigurationError(f'Need positive gain and tau, got {gain}, '
                                 f'{tau}')

    if delay <= 0:
        raise ConfigurationError('A delay-free integrator with one lag has '
                                 'no finite ultimate gain')

    def phase_margin(w):
        return math.atan(w * tau) + w * delay - math.pi / 2

    w_u = brentq(phase_margin, 1e-9, math.pi / (2 * delay))
    k_u = w_u * math.sqrt(1 + (w_u * tau)**2) / gain

    return k_u, 2 * math.pi / w_u


def ziegler_nichols(k_u, p_u, detune=0.5, reverse=False,
                    derivative_filter=10.0):

    kp = 0.6 * k_u * detune
    t_i = p_u / 2
    t_d = p_u / 8
    ki = kp / t_i

    return PidGains(kp=kp, ki=ki, kd=kp * t_d,
                    integral_limit=0.5 / ki, reverse=reverse,
                    derivative_filter=derivative_filter)


def tune_pid_baseline(p1, p2, bc, params, detune=0.5,
                      derivative_filter=10.0):
    """ Baseline gains from the closed-form relay test on the linearised
    plant, with the Ziegler-Nichols PID rule.

    Each valve sees an integrating chamber behind its actuator lag and
    transport delay. The loops sharing V2 split the detuned gain.

    Args:
        p1: Operating pressure of V1 [Pa].
        p2: Operating pressure of V2 [Pa].
        bc: Boundary conditions.
        params: Plant parameters.
        detune: Factor applied to the Ziegler-Nichols gains.
        derivative_filter: N of the derivative filter of every loop.

    Returns:
        A tuple of three PidGains (Valve_air, Valve1, Valve2).
    """

    t_steady = bc.T_in
    coeffs = linearized_coeffs(ChamberState(p1, t_steady),
                               ChamberState(p2, t_steady), bc, params.gas,
                               params.v1_volume, params.v2_volume)
    sens = valve_flow_sensitivities(p1, p2, t_steady, bc, params)

    # kPa/s per unit opening
    process_gains = (coeffs.a_air * sens[0] / 1e3,
                     coeffs.b1 * sens[1] / 1e3,
                     coeffs.b2 * sens[2] / 1e3)

    shares = (1.0, 0.5, 0.5)
    reverse = (True, False, False)

    gains = []

    for k, tau, share, rev in zip(process_gains, params.taus, shares,
                                  reverse):
        k_u, p_u = ultimate_point(k, tau, params.delay)
        gains.append(ziegler_nichols(k_u, p_u, detune * share, rev,
                                     derivative_filter))

    logger.info('PID baseline: ' + ', '.join(
        f'({g.kp:.4g}, {g.ki:.4g}, {g.kd:.4g})' for g in gains))

    return tuple(gains)


class PidController(PressureController):
    """ Three independent loops: Valve_air holds V1, Valve1 and Valve2 each
    hold V2.
    """

    def __init__(self, gains, trim, dt, rate_max):

        super().__init__(trim, dt, rate_max)

        if len(gains) != 3:
            raise ConfigurationError('Need one PidGains per valve')

        self.gains = tuple(gains)
        self.loops = (PidLoopState(),) * 3

    def compute(self, measured, setpoints):

        chambers = (0, 1, 1)
        commands = []
        loops = []

        for loop, gains, base, i in zip(self.loops, self.gains, self.trim,
                                        chambers):
            cmd, loop = pid_step(loop, setpoints[i], measured[i], gains,
                                 self.dt, base)
            commands.append(cmd)
            loops.append(loop)

        self.loops = tuple(loops)

        return ValveCommandSet(*commands), {}

    def record_applied(self, applied, saturated):

        # Rate limiting counts as saturation for the next integration.
        self.loops = tuple(loop._replace(saturated=loop.saturated or flag)
                           for loop, flag in zip(self.loops, saturated))

    def metadata(self):

        return {
            'controller': 'pid',
            'gains': [asdict(g) for g in self.gains],
        }
