""" Acceptance checks, run by `intake-ctrl validate`.

The closed-loop checks run the `physical` presets: the `published` presets
admit no steady state for the plant to start from.
"""
import logging
import math
from dataclasses import replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from intake_ctrl.config import SimConfig
from intake_ctrl.evaluation import FLOAT_FORMAT, TIMESERIES_COLUMNS
from intake_ctrl.observer import EsoConfig, EsoState, TdState, eso_step, \
    td_step
from intake_ctrl.penalty import (PenaltyProblem, augmented_objective,
                                 grad_L, objective, penalty_alpha,
                                 solve_offline)
from intake_ctrl.plant.gas import BoundaryConditions
from intake_ctrl.plant.plant import (PlantParams, initial_state, plant_step,
                                     total_mass)
from intake_ctrl.simulation import run_simulation

logger = logging.getLogger(__name__)

CLOSED_LOOP_PRESETS = ('physical', 'physical-steep')

# Smallest pid/adrc ratio of max|P2 err| per preset. On the steep ramp both
# controllers wait on the 2.5 s valve lag, which caps the ratio near 1.8
# even without noise.
MAX_ERROR_RATIOS = {'physical': 2.0, 'physical-steep': 1.5}
RMSE_RATIO = 1.5


class CheckResult(NamedTuple):

    name: str
    passed: bool
    detail: str


@lru_cache(maxsize=None)
def closed_loop_metrics(cfg, controller, preset):

    cfg = cfg.with_overrides(controller=controller, scenario=preset)

    return run_simulation(cfg).metrics


def check_constraint_bound(cfg):

    m = closed_loop_metrics(cfg, 'adrc', 'physical')
    passed = m.max_abs_err_v2 <= 3.0 and m.max_abs_err_v1 <= 5.0

    return passed, (f'max|P1 err| = {m.max_abs_err_v1:.3f} kPa, '
                    f'max|P2 err| = {m.max_abs_err_v2:.3f} kPa')


def check_baseline_ordering(cfg):

    details = []
    passed = True

    for preset in CLOSED_LOOP_PRESETS:
        adrc = closed_loop_metrics(cfg, 'adrc', preset)
        pid = closed_loop_metrics(cfg, 'pid', preset)
        ratio = MAX_ERROR_RATIOS[preset]
        passed &= pid.max_abs_err_v2 >= ratio * adrc.max_abs_err_v2
        passed &= pid.rmse_v2 >= RMSE_RATIO * adrc.rmse_v2
        details.append(
            f'{preset}: max|P2 err| pid/adrc = {pid.max_abs_err_v2:.3f}/'
            f'{adrc.max_abs_err_v2:.3f}, rmse_v2 pid/adrc = '
            f'{pid.rmse_v2:.3f}/{adrc.rmse_v2:.3f}')

    return passed, '; '.join(details)


def check_valve_oscillation(cfg):

    adrc = max(closed_loop_metrics(cfg, 'adrc', 'physical').valve_p2p)
    pid = max(closed_loop_metrics(cfg, 'pid', 'physical').valve_p2p)

    return adrc <= 0.5 * pid, (f'valve peak-to-peak adrc = {adrc:.4f}, '
                               f'pid = {pid:.4f}')


def conflicting_problem(gamma, **overrides):
    """ Objective centred at 65 kPa with the V1 bound |P1 - 70| <= 2, whose
    constrained optimum is P1 = 68. The penalty factor stays fixed.
    """

    settings = dict(p1_set=65.0, p2_set=130.0, c1=70.0, c2=130.0, eps1=2.0,
                    eps2=3.0, gamma=gamma, mu=1.0, sigma=1.0, omega=1.0,
                    gamma_max=gamma, xi=1e-300, tol=1e-13, max_iters=100000)
    settings.update(overrides)

    return PenaltyProblem(**settings)


def penalty_minimizers(gammas, start=(66.0, 130.0)):
    """ (gamma, P1*, f, alpha, L) at the minimiser for each fixed gamma. """

    rows = []

    for gamma in gammas:
        prob = conflicting_problem(gamma)
        P1, P2 = solve_offline(prob, start).solution
        rows.append((gamma, P1, objective(P1, P2, prob),
                     penalty_alpha(P1, P2, prob),
                     augmented_objective(P1, P2, prob)))

    return rows


def check_penalty_convergence(cfg=None):

    rows = penalty_minimizers([1.0, 10.0, 100.0, 1e4, 1e6])
    slack = 1e-9
    passed = True

    for (_, _, f_a, alpha_a, theta_a), (_, _, f_b, alpha_b, theta_b) in \
            zip(rows, rows[1:]):
        passed &= alpha_b <= alpha_a + slack
        passed &= f_b >= f_a - slack
        passed &= theta_b >= theta_a - slack

    gamma, P1, _, alpha, _ = rows[-1]
    passed &= abs(P1 - 68.0) < 1e-2 and gamma * alpha < 1e-6

    return passed, (f'P1* = {P1:.6f} kPa at gamma = {gamma:g}, '
                    f'gamma * alpha = {gamma * alpha:.3g}')


def gradient_check_problem():

    return PenaltyProblem(p1_set=65.0, p2_set=130.0, eps1=5.0, eps2=3.0,
                          gamma=10.0, mu=0.02, sigma=0.02)


def gradient_error(n_points=1000, seed=2, step=1e-5):
    """ Largest relative difference between grad_L and central finite
    differences over random points, infeasible ones included.
    """

    prob = gradient_check_problem()
    rng = np.random.Generator(np.random.PCG64(seed))
    points = np.column_stack([rng.uniform(55, 75, n_points),
                              rng.uniform(122, 138, n_points)])

    worst = 0.0

    for P1, P2 in points:
        analytic = np.array(grad_L(P1, P2, prob))
        numeric = np.array([
            (augmented_objective(P1 + step, P2, prob) -
             augmented_objective(P1 - step, P2, prob)) / (2 * step),
            (augmented_objective(P1, P2 + step, prob) -
             augmented_objective(P1, P2 - step, prob)) / (2 * step)])
        scale = np.maximum(np.abs(analytic), 1.0)
        worst = max(worst, float(np.max(np.abs(analytic - numeric) / scale)))

    return worst


def check_gradient_oracle(cfg=None):

    worst = gradient_error()

    return worst < 1e-6, f'max relative error {worst:.3g}'


def eso_disturbance_trace(d=5.0, omega=5.0, dt=0.01, duration=4.0):
    """ Observer run against the double integrator y'' = d from rest.

    Returns:
        Arrays (t, z3) after each step.
    """

    cfg = EsoConfig(omega=omega)
    z = EsoState(z1=0.0)
    times, z3 = [], []

    for k in range(int(round(duration / dt))):
        t = k * dt
        z = eso_step(z, d * t**2 / 2, (0.0, 0.0, 0.0), cfg, dt)
        times.append(t + dt)
        z3.append(z.z3)

    return np.array(times), np.array(z3)


def check_eso_disturbance(cfg=None):

    d, omega = 5.0, 5.0
    t, z3 = eso_disturbance_trace(d=d, omega=omega)

    # The triple-pole estimate enters the 2% band at omega * t of about 8.
    settled = t >= 9 / omega
    worst = float(np.max(np.abs(z3[settled] - d)) / d)

    return worst < 0.02, (f'max |z3 - d| / d = {worst:.4f} for '
                          f't >= {9 / omega:.2f} s')


def transient_plant():
    """ A small plant whose flows stay choked: supply into V1, Valve1 into V2
    and a fixed engine draw, with V1 starting hot and off its steady state.
    """

    params = PlantParams(v1_volume=30.0, v2_volume=800.0, supply_area=0.05)
    bc = BoundaryConditions(mdot_out=20.0)
    openings = (0.0, 0.0236, 0.0)

    return params, bc, openings


def integrate_transient(dt, duration=10.0):

    params, bc, openings = transient_plant()
    state = initial_state(40e3, 300.0, 15e3, 253.0, openings, params, dt)

    trajectory = []

    for k in range(int(round(duration / dt))):
        state = plant_step(state, openings, bc, dt, params, t=k * dt)
        trajectory.append((state.chamber1.P / 1e3, state.chamber1.T,
                           state.chamber2.P / 1e3, state.chamber2.T))

    return np.array(trajectory)


def rk4_convergence_order(dts=(0.02, 0.01, 0.005), duration=10.0):
    """ Observed order from successive differences on the coarsest grid. """

    runs = [integrate_transient(dt, duration) for dt in dts]
    coarse = len(runs[0])

    on_grid = [run[int(round(len(run) / coarse)) - 1::
                   int(round(len(run) / coarse))] for run in runs]

    diffs = [np.max(np.abs(a - b)) for a, b in zip(on_grid, on_grid[1:])]

    return [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]


def check_integrator_order(cfg=None):

    orders = rk4_convergence_order()
    passed = all(3.5 <= order <= 4.5 for order in orders)

    return passed, 'observed order ' + ', '.join(f'{o:.3f}' for o in orders)


def sealed_mass_drift(dt=0.01, duration=10.0, heat=(5e5, -2e5)):
    """ Largest relative change of the chamber masses over a run with every
    valve and the supply closed and heat exchanged through the walls.
    """

    params = PlantParams(supply_area=0.0)
    bc = BoundaryConditions(Q1=heat[0], Q2=heat[1], mdot_out=0.0)
    closed = (0.0, 0.0, 0.0)

    state = initial_state(130e3, 253.0, 65e3, 253.0, closed, params, dt)
    m0 = np.array(total_mass(state, params))

    for k in range(int(round(duration / dt))):
        state = plant_step(state, closed, bc, dt, params, t=k * dt)

    return float(np.max(np.abs(np.array(total_mass(state, params)) - m0) /
                        m0))


def check_conservation(cfg=None):

    drift = sealed_mass_drift()

    return drift < 1e-6, f'relative mass drift {drift:.3g}'


def timeseries_bytes(cfg):

    series = run_simulation(cfg).series

    return series[TIMESERIES_COLUMNS].to_csv(
        index=False, float_format=FLOAT_FORMAT).encode()


def check_determinism(cfg):

    short = replace(cfg, scenario=replace(cfg.scenario, duration_s=20.0))

    identical = timeseries_bytes(short) == timeseries_bytes(short)

    return identical, ('identical' if identical else 'outputs differ')


def td_ramp_slope(slope=0.2, start=65.0, ramp_time=25.0, dt=0.01,
                  measure_at=20.0):
    """ Derivative estimate of the differentiator part-way along a ramp. """

    td = TdState(v1=start, v2=0.0, r=10.0, h=2 * dt)

    for k in range(int(round(measure_at / dt))):
        t = k * dt
        setpoint = start + slope * min(t, ramp_time)
        td = td_step(td, setpoint, dt)

    return td.v2


def check_td_slope(cfg=None):

    v2 = td_ramp_slope()

    return abs(v2 - 0.2) <= 0.002, f'steady v2 = {v2:.5f} kPa/s'


CHECKS = {
    'constraint-bound': check_constraint_bound,
    'baseline-ordering': check_baseline_ordering,
    'valve-oscillation': check_valve_oscillation,
    'penalty-convergence': check_penalty_convergence,
    'gradient-oracle': check_gradient_oracle,
    'eso-disturbance': check_eso_disturbance,
    'integrator-order': check_integrator_order,
    'conservation': check_conservation,
    'determinism': check_determinism,
    'td-slope': check_td_slope,
}


def run_checks(cfg=None, names=None):
    """ Runs the named checks, all of them by default.

    Returns:
        A list of CheckResult in the order of CHECKS.
    """

    cfg = SimConfig() if cfg is None else cfg
    names = list(CHECKS) if names is None else names
    results = []

    for name in names:
        passed, detail = CHECKS[name](cfg)
        logger.info(f'{name}: {"PASS" if passed else "FAIL"} ({detail})')
        results.append(CheckResult(name, bool(passed), detail))

    return results
