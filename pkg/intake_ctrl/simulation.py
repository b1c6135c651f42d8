import logging
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from intake_ctrl.controllers.adrc import (AdrcController, AdrcGains,
                                          effective_gains)
from intake_ctrl.controllers.pid import PidController, PidGains, \
    tune_pid_baseline
from intake_ctrl.evaluation import (TIMESERIES_COLUMNS, RunMetrics,
                                    compute_metrics, phase_metrics)
from intake_ctrl.exceptions import ConfigurationError, IntegrationFault
from intake_ctrl.observer import MAX_OMEGA_DT
from intake_ctrl.penalty import PenaltyProblem
from intake_ctrl.plant.plant import (control_effectiveness, initial_state,
                                     plant_step, state_flows, trim_openings)
from intake_ctrl.scenario import apply_noise

logger = logging.getLogger(__name__)

SATURATION_WARNING_RATIO = 0.1


class SimulationResult(NamedTuple):

    series: pd.DataFrame
    metrics: RunMetrics
    phase_metrics: pd.DataFrame
    metadata: dict
    fault: Optional[IntegrationFault] = None


def _check_rates(cfg, scenario, params):

    dt = scenario.dt

    if dt > min(params.taus) / 5:
        raise ConfigurationError(
            f'dt = {dt} s is too coarse for the valve time constants '
            f'{params.taus} (need dt <= tau / 5)')

    if cfg.run.controller == 'adrc':
        omega = max(cfg.adrc.omega1_rad_s, cfg.adrc.omega2_rad_s)
        if omega * dt > MAX_OMEGA_DT:
            raise ConfigurationError(
                f'Observer bandwidth {omega} rad/s is too high for dt = {dt} '
                f's (need omega * dt <= {MAX_OMEGA_DT})')


def build_adrc_gains(cfg, p1, p2, bc, params):
    """ADRC gains with the effective gains derived at (p1, p2) [Pa] unless
    configured."""

    ac = cfg.adrc
    b1, b2, c12 = effective_gains(control_effectiveness(p1, p2, bc, params),
                                 ac.rho)

    return AdrcGains(
        k11=ac.k11, k12=ac.k12, k13=ac.k13,
        k21=ac.k21, k22=ac.k22, k23=ac.k23,
        b_eff1=b1 if ac.b_eff1 is None else ac.b_eff1,
        b_eff2=b2 if ac.b_eff2 is None else ac.b_eff2,
        c12=c12 if ac.c12 is None else ac.c12,
        rho=ac.rho, pd_sign_convention=ac.pd_sign_convention,
        decouple=ac.decouple)


def build_pid_gains(cfg, p1, p2, bc, params):

    pc = cfg.pid

    if pc.tuned:
        return tune_pid_baseline(p1, p2, bc, params, detune=pc.detune,
                                 derivative_filter=pc.derivative_filter_n)

    gains = []

    for loop, reverse in zip(('air', 'valve1', 'valve2'),
                             (True, False, False)):
        kp, ki, kd = pc.loop_gains(loop)
        limit = pc.integral_limit_kpa_s
        if limit is None:
            limit = 0.5 / ki if ki > 0 else 100.0
        gains.append(PidGains(kp=kp, ki=ki, kd=kd, integral_limit=limit,
                              reverse=reverse,
                              derivative_filter=pc.derivative_filter_n))

    return tuple(gains)


def build_controller(cfg, scenario, trim, params, bc):
    """ The configured controller, set up at the initial steady state. """

    setpoints = scenario.setpoints(0.0)
    p1, p2 = (s * 1e3 for s in setpoints)
    rate_max = cfg.run.valve_rate_max_per_s

    if cfg.run.controller == 'pid':
        gains = build_pid_gains(cfg, p1, p2, bc, params)
        return PidController(gains, trim, scenario.dt, rate_max)

    pc = cfg.penalty
    penalty = PenaltyProblem(
        p1_set=setpoints[0], p2_set=setpoints[1], eps1=scenario.eps1,
        eps2=scenario.eps2, gamma=pc.gamma, mu=pc.mu, sigma=pc.sigma,
        lr=pc.lr, omega=pc.omega, xi=pc.xi, gamma_max=pc.gamma_max_online)

    return AdrcController(
        gains=build_adrc_gains(cfg, p1, p2, bc, params),
        omegas=(cfg.adrc.omega1_rad_s, cfg.adrc.omega2_rad_s),
        penalty=penalty, trim=trim, dt=scenario.dt, rate_max=rate_max,
        delay=params.delay, initial=setpoints, setpoints=setpoints,
        td_r=cfg.adrc.td_r, td_h_factor=cfg.adrc.td_h_factor,
        n_grow=cfg.adrc.n_grow, m_reset=cfg.adrc.m_reset,
        meas_filter_tau=cfg.adrc.meas_filter_tau_s)


def run_simulation(cfg, progress=False):
    """ Runs one closed-loop scenario.

    Each tick evaluates the scenario, adds measurement noise, lets the
    controller compute and limit its commands, records the tick and then
    advances the plant. The plant starts trimmed at the initial setpoints.

    Args:
        cfg: A SimConfig.
        progress: Show a tqdm progress bar.

    Returns:
        A SimulationResult. If the plant state becomes nonphysical the run
        stops there and the result carries the fault and the partial series.

    Raises:
        ConfigurationError: for invalid settings, including a scenario whose
            initial setpoints admit no steady state.
    """

    scenario = cfg.build_scenario()
    params = cfg.plant.plant_params()
    dt = scenario.dt

    _check_rates(cfg, scenario, params)

    mdot0 = scenario.mdot_out_at(0.0)
    bc0 = cfg.plant.boundary_conditions(mdot_out=mdot0)
    sp1, sp2 = scenario.setpoints(0.0)

    trim = trim_openings(sp1 * 1e3, sp2 * 1e3, mdot0, bc0, params)
    state = initial_state(sp1 * 1e3, bc0.T_in, sp2 * 1e3, bc0.T_in, trim,
                          params, dt)

    controller = build_controller(cfg, scenario, trim, params, bc0)
    rng = scenario.noise.make_rng()
    bound = scenario.noise.press_bound

    logger.info(f'Running {cfg.run.controller} on scenario {scenario.name} '
                f'for {scenario.duration} s at dt = {dt} s, seed '
                f'{scenario.noise.seed}')

    rows = []
    saturated_ticks = np.zeros(3, dtype=int)
    fault = None

    for k in tqdm(range(scenario.n_steps), disable=not progress):

        t = k * dt
        setpoints = scenario.setpoints(t)
        bc = bc0._replace(mdot_out=scenario.mdot_out_at(t))

        p_true = (state.chamber1.P / 1e3, state.chamber2.P / 1e3)
        measured = tuple(apply_noise(p, bound, rng, scenario.noise.model)
                         for p in p_true)

        out = controller.step(measured, setpoints)
        saturated_ticks += np.array(out.saturated, dtype=int)

        flows = state_flows(state, bc, params)

        rows.append((t, *p_true, *measured, *setpoints, state.chamber1.T,
                     state.chamber2.T, *out.commands, *state.positions,
                     flows.supply.mdot, flows.air.mdot, flows.valve1.mdot,
                     flows.valve2.mdot, flows.out.mdot, out.z13, out.z23,
                     out.grad_l1, out.grad_l2, out.gamma, out.L))

        try:
            state = plant_step(state, out.commands, bc, dt, params, t=t)
        except IntegrationFault as e:
            logger.warning(f'Run aborted: {e}')
            fault = e
            break

    series = pd.DataFrame(rows, columns=TIMESERIES_COLUMNS)

    ratios = saturated_ticks / max(len(rows), 1)

    for name, ratio in zip(('Valve_air', 'Valve1', 'Valve2'), ratios):
        if ratio > SATURATION_WARNING_RATIO:
            logger.warning(f'{name} saturated or rate limited on '
                           f'{100 * ratio:.1f}% of ticks')

    window = (cfg.run.metric_window_start_s, cfg.run.metric_window_end_s)
    metrics = compute_metrics(series, scenario, window=window)

    metadata = {
        'controller': cfg.run.controller,
        'scenario': scenario.name,
        'seed': scenario.noise.seed,
        'dt_s': dt,
        # The control cycle of the real plant is unknown; one rate is used
        # for plant, observers and control law.
        'control_cycle_s': dt,
        'duration_s': scenario.duration,
        'trim_openings': list(trim),
        'saturation_ratio': [float(r) for r in ratios],
        'controller_settings': controller.metadata(),
        'fault': None if fault is None else {
            't': fault.t, 'reason': fault.reason},
    }

    if cfg.run.controller == 'adrc':
        metadata['pd_sign_convention'] = controller.gains.pd_sign_convention

    logger.info(f'Finished: rmse=({metrics.rmse_v1:.4f}, '
                f'{metrics.rmse_v2:.4f}) kPa, max_abs_err=('
                f'{metrics.max_abs_err_v1:.4f}, {metrics.max_abs_err_v2:.4f}) '
                f'kPa')

    return SimulationResult(series=series, metrics=metrics,
                            phase_metrics=phase_metrics(series, scenario),
                            metadata=metadata, fault=fault)
