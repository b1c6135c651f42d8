import math

import numpy as np
import pytest

from intake_ctrl.controllers.adrc import (AdrcController, AdrcGains,
                                          adrc_command, decouple,
                                          effective_gains, eso_rows)
from intake_ctrl.controllers.allocation import (ValveCommandSet,
                                                allocate_valves,
                                                saturate_and_rate_limit,
                                                saturation_flags)
from intake_ctrl.controllers.pid import (PidController, PidGains,
                                         PidLoopState, pid_step,
                                         tune_pid_baseline, ultimate_point)
from intake_ctrl.exceptions import ConfigurationError
from intake_ctrl.observer import EsoState, TdState
from intake_ctrl.penalty import PenaltyProblem
from intake_ctrl.plant.gas import BoundaryConditions
from intake_ctrl.plant.plant import PlantParams

PUBLISHED_GAINS = dict(k11=0.001, k12=0.0001, k13=0.1, k21=0.04, k22=0.04,
                   k23=1.0)

TRIM = (0.146, 0.273, 0.273)


def test_adrc_regulation_equilibrium():

    gains = AdrcGains()
    z = EsoState(65.0, 0.0, 0.0)
    td = TdState(65.0, 0.0)

    assert adrc_command(z, z, td, td, (0.0, 0.0), gains) == (0, 0, 0, 0)


def test_adrc_published_gains():

    gains = AdrcGains(pd_sign_convention='printed', **PUBLISHED_GAINS)

    u_c1, u_c2, _, _ = adrc_command(
        EsoState(129.0), EsoState(65.0), TdState(130.0), TdState(65.0),
        (0.0, 0.0), gains)

    assert np.isclose(u_c1, 0.001)
    assert u_c2 == 0


def test_adrc_cancels_disturbance():

    gains = AdrcGains(b_eff1=-190.0, b_eff2=60.0)

    _, _, U1, U2 = adrc_command(
        EsoState(130.0, 0.0, 3.0), EsoState(65.0, 0.0, -2.0),
        TdState(130.0), TdState(65.0), (0.0, 0.0), gains)

    assert np.isclose(U1, -3.0 / -190.0)
    assert np.isclose(U2, 2.0 / 60.0)


@pytest.mark.parametrize('convention', ['printed', 'conventional'])
def test_adrc_command_is_linear(convention):

    gains = AdrcGains(pd_sign_convention=convention)
    np.random.seed(2)

    def draw():
        return (EsoState(*np.random.randn(3)), EsoState(*np.random.randn(3)),
                TdState(*np.random.randn(2)), TdState(*np.random.randn(2)),
                tuple(np.random.randn(2)))

    a, b = draw(), draw()

    def add(x, y):
        if isinstance(x, TdState):
            return x._replace(v1=x.v1 + y.v1, v2=x.v2 + y.v2)
        if isinstance(x, EsoState):
            return EsoState(*(np.array(x) + np.array(y)))
        return tuple(np.array(x) + np.array(y))

    summed = [add(x, y) for x, y in zip(a, b)]

    out_sum = np.array(adrc_command(*summed, gains))
    out_parts = (np.array(adrc_command(*a, gains)) +
                 np.array(adrc_command(*b, gains)))

    assert np.allclose(out_sum, out_parts, rtol=1e-12, atol=1e-12)


def test_adrc_gains_validation():

    with pytest.raises(ConfigurationError):
        AdrcGains(k11=-1.0)

    with pytest.raises(ConfigurationError):
        AdrcGains(b_eff2=0.0)

    with pytest.raises(ConfigurationError):
        AdrcGains(rho=1.5)

    with pytest.raises(ConfigurationError):
        AdrcGains(pd_sign_convention='other')


def test_compensation_recovers_pd_response():
    """ With a perfect disturbance estimate the loop behaves as a double
    integrator under PD control, y = 1 - exp(-t) (1 + t).
    """

    b, f = 2.0, 3.0
    gains = AdrcGains(k11=1.0, k12=2.0, k13=0.0, b_eff1=b)
    td = TdState(v1=1.0, v2=0.0)

    dt = 1e-3
    y, ydot = 0.0, 0.0
    worst = 0.0

    for k in range(8000):
        z = EsoState(y, ydot, f)
        _, _, U1, _ = adrc_command(z, z, td, td, (0.0, 0.0), gains)
        ydot += dt * (b * U1 + f)
        y += dt * ydot
        t = (k + 1) * dt
        worst = max(worst, abs(y - (1 - math.exp(-t) * (1 + t))))

    assert worst < 0.01


def test_effective_gains_and_observer_rows():

    effect = np.array([[-193.5, -228.0, -80.9], [0.0, 85.5, 30.4]])
    b1, b2, c12 = effective_gains(effect, 0.5)

    assert np.isclose(b1, -193.5)
    assert np.isclose(b2, 0.5 * 85.5 + 0.5 * 30.4)
    assert np.isclose(c12, 0.5 * -228.0 + 0.5 * -80.9)

    gains = AdrcGains(b_eff1=b1, b_eff2=b2, c12=c12)
    row1, row2 = eso_rows(gains)

    U1, U2 = 0.02, -0.05
    cmds = np.array([U1, 0.5 * U2, 0.5 * U2])

    assert np.isclose(np.dot(row1, cmds), b1 * U1 + c12 * U2)
    assert np.isclose(np.dot(row2, cmds), b2 * U2)

    row1_plain, _ = eso_rows(AdrcGains(b_eff1=b1, b_eff2=b2, c12=c12,
                                       decouple=False))

    assert np.isclose(np.dot(row1_plain, cmds), b1 * U1)


def test_decouple_cancels_cross_effect():

    gains = AdrcGains(b_eff1=-193.5, b_eff2=58.0, c12=-154.4)
    U1, U2 = 0.01, 0.03

    V1 = decouple(U1, U2, gains)

    assert np.isclose(gains.b_eff1 * V1 + gains.c12 * U2,
                      gains.b_eff1 * U1)


def test_allocation():

    assert allocate_valves(0.0, 0.0, 0.5, TRIM) == TRIM

    cmds = allocate_valves(0.0, 0.1, 0.5, TRIM)

    assert np.isclose(cmds.vp1, TRIM[1] + 0.05)
    assert np.isclose(cmds.vp2, TRIM[2] + 0.05)

    cmds = allocate_valves(0.0, 0.1, 0.3, TRIM)

    assert np.isclose(cmds.vp1 + cmds.vp2 - TRIM[1] - TRIM[2], 0.1)


def test_saturation_and_rate_limit():

    prev = ValveCommandSet(0.0, 0.5, 1.0)

    applied = saturate_and_rate_limit(ValveCommandSet(1.0, 0.501, 1.2),
                                      prev, 0.01, 0.4)

    assert np.isclose(applied.vp_air, 0.004)
    assert applied.vp1 == 0.501
    assert applied.vp2 == 1.0

    requested = ValveCommandSet(-5.0, 0.501, 1.2)
    applied = saturate_and_rate_limit(requested, prev, 0.01, 0.4)

    assert applied.vp_air == 0.0
    assert saturation_flags(requested, applied) == (True, False, True)


def test_pid_examples():

    gains = PidGains(kp=0.05, ki=0.0, kd=0.0)

    command, _ = pid_step(PidLoopState(), 130.0, 130.0, gains, 0.01, 0.3)

    assert command == 0.3

    state = PidLoopState()

    for _ in range(5):
        command, state = pid_step(state, 130.0, 128.0, gains, 0.01, 0.3)
        assert np.isclose(command, 0.3 + 0.05 * 2.0)


def test_pid_reverse_action():

    gains = PidGains(kp=0.05, ki=0.0, kd=0.0, reverse=True)

    command, _ = pid_step(PidLoopState(), 130.0, 128.0, gains, 0.01, 0.3)

    assert np.isclose(command, 0.3 - 0.1)


def test_pid_integral_frozen_while_saturated():

    gains = PidGains(kp=1.0, ki=0.5, kd=0.0)

    small, big = PidLoopState(), PidLoopState()

    for _ in range(100):
        cmd_small, small = pid_step(small, 130.0, 125.0, gains, 0.01, 0.3)
        cmd_big, big = pid_step(big, 130.0, 80.0, gains, 0.01, 0.3)

    assert cmd_small == cmd_big == 1.0
    assert small.integral == big.integral == 0.0
    assert small.saturated and big.saturated


def test_pid_integral_clamped():

    gains = PidGains(kp=0.0, ki=0.001, kd=0.0, integral_limit=2.0)
    state = PidLoopState()

    for _ in range(1000):
        _, state = pid_step(state, 130.0, 129.0, gains, 0.01, 0.3)

    assert state.integral == 2.0


def test_pid_gains_validation():

    with pytest.raises(ConfigurationError):
        PidGains(kp=-1.0, ki=0.0, kd=0.0)

    with pytest.raises(ConfigurationError):
        PidGains(kp=1.0, ki=0.0, kd=0.0, integral_limit=0.0)

    with pytest.raises(ConfigurationError):
        PidGains(kp=1.0, ki=0.0, kd=0.1, derivative_filter=-1.0)


def test_pid_derivative_filter():

    # Filter time constant kd / (kp * N) = 0.01 s, one step.
    gains = PidGains(kp=0.001, ki=0.0, kd=1e-4, derivative_filter=10.0)
    raw = PidGains(kp=0.001, ki=0.0, kd=1e-4, derivative_filter=0.0)

    assert np.isclose(gains.filter_time, 0.01)
    assert raw.filter_time == 0.0

    filtered, unfiltered = PidLoopState(), PidLoopState()

    # Pressure falling at 1 kPa/s.
    for k in range(60):
        measurement = 65.0 - 0.01 * k
        _, filtered = pid_step(filtered, 65.0, measurement, gains, 0.01, 0.3)
        _, unfiltered = pid_step(unfiltered, 65.0, measurement, raw, 0.01,
                                 0.3)
        if k == 1:
            assert np.isclose(filtered.derivative, 0.5)
            assert np.isclose(unfiltered.derivative, 1.0)

    assert np.isclose(filtered.derivative, 1.0)

    # A single 1 kPa jump reaches the output at half its raw weight.
    state = PidLoopState(prev_measurement=65.0)
    cmd, _ = pid_step(state, 65.0, 64.0, gains, 0.01, 0.3)
    cmd_raw, _ = pid_step(state, 65.0, 64.0, raw, 0.01, 0.3)

    assert np.isclose(cmd, 0.3 + 0.001 + 0.005)
    assert np.isclose(cmd_raw, 0.3 + 0.001 + 0.01)


def test_zero_gain_pid_passes_trim_through():

    zero = PidGains(kp=0.0, ki=0.0, kd=0.0)
    controller = PidController((zero,) * 3, TRIM, 0.01, 0.4)
    np.random.seed(2)

    for _ in range(50):
        measured = tuple(np.array([130.0, 65.0]) + np.random.randn(2))
        out = controller.step(measured, (130.0, 65.0))
        assert out.commands == TRIM
        assert not any(out.saturated)


def test_ultimate_point():

    gain, tau, delay = 300.0, 2.5, 0.15

    k_u, p_u = ultimate_point(gain, tau, delay)
    w = 2 * math.pi / p_u

    assert np.isclose(math.atan(w * tau) + w * delay, math.pi / 2)
    assert np.isclose(k_u * gain / (w * math.sqrt(1 + (w * tau)**2)), 1.0)

    with pytest.raises(ConfigurationError):
        ultimate_point(gain, tau, 0.0)


def test_baseline_tuning():

    bc = BoundaryConditions(mdot_out=780.0)
    gains = tune_pid_baseline(130e3, 65e3, bc, PlantParams())

    assert len(gains) == 3
    assert [g.reverse for g in gains] == [True, False, False]
    assert all(g.kp > 0 and g.ki > 0 and g.kd > 0 for g in gains)
    assert all(np.isclose(g.integral_limit * g.ki, 0.5) for g in gains)
    # Td / N with Td = Pu / 8.
    assert all(np.isclose(g.filter_time, g.kd / g.kp / 10) for g in gains)

    unfiltered = tune_pid_baseline(130e3, 65e3, bc, PlantParams(),
                                   derivative_filter=0.0)

    assert all(g.filter_time == 0.0 for g in unfiltered)


def test_adrc_controller_holds_trim_at_setpoints():

    penalty = PenaltyProblem(p1_set=130.0, p2_set=65.0)
    controller = AdrcController(
        gains=AdrcGains(c12=-154.4), omegas=(2.0, 5.0), penalty=penalty,
        trim=TRIM, dt=0.01, rate_max=0.4, delay=0.15, initial=(130.0, 65.0),
        setpoints=(130.0, 65.0))

    for _ in range(20):
        out = controller.step((130.0, 65.0), (130.0, 65.0))

    assert out.commands == TRIM
    assert out.saturated == (False, False, False)
    assert out.z13 == 0 and out.z23 == 0
    assert out.L == 0 and out.gamma == 0.5

    meta = controller.metadata()

    assert meta['controller'] == 'adrc'
    assert meta['omegas'] == [2.0, 5.0]


def _adrc_at_trim(meas_filter_tau):

    return AdrcController(
        gains=AdrcGains(c12=-154.4), omegas=(2.0, 5.0),
        penalty=PenaltyProblem(p1_set=130.0, p2_set=65.0), trim=TRIM,
        dt=0.01, rate_max=0.4, delay=0.15, initial=(130.0, 65.0),
        setpoints=(130.0, 65.0), meas_filter_tau=meas_filter_tau)


def test_adrc_measurement_filter():

    filtered = _adrc_at_trim(0.1)
    direct = _adrc_at_trim(0.0)

    filtered.step((131.1, 65.0), (130.0, 65.0))
    direct.step((131.1, 65.0), (130.0, 65.0))

    # Gain dt / (tau + dt) = 1 / 11 towards the new reading.
    assert np.allclose(filtered.filtered, (130.1, 65.0))
    assert direct.filtered == (131.1, 65.0)

    for _ in range(300):
        filtered.step((131.1, 65.0), (130.0, 65.0))

    assert np.isclose(filtered.filtered[0], 131.1, rtol=0, atol=1e-6)
    assert filtered.metadata()['meas_filter_tau'] == 0.1
