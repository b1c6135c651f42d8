import json
import os
from os.path import join
from typing import NamedTuple, Tuple

import numpy as np
import pandas as pd

from intake_ctrl.exceptions import DomainError

TIMESERIES_COLUMNS = [
    't', 'p1_true', 'p2_true', 'p1_meas', 'p2_meas', 'p1_set', 'p2_set',
    't1', 't2', 'vp_air_cmd', 'vp1_cmd', 'vp2_cmd', 'vp_air_act', 'vp1_act',
    'vp2_act', 'mdot_in', 'mdot_air', 'mdot_1', 'mdot_2', 'mdot_out', 'z13',
    'z23', 'grad_l1', 'grad_l2', 'gamma', 'L'
]

VALVE_COLUMNS = ['vp_air_act', 'vp1_act', 'vp2_act']

PHASES = {'phase1': (0.0, 100.0), 'phase2': (100.0, 250.0),
          'phase3': (250.0, 300.0)}

FLOAT_FORMAT = '%.17g'


class RunMetrics(NamedTuple):
    """ Tracking indices on the true chamber pressures [kPa], valve
    peak-to-peak openings within the metric window (Valve_air, Valve1,
    Valve2), time spent outside the pressure bounds [s] and settling times
    after the last disturbance onset [s, NaN if never settled].
    """

    rmse_v1: float
    rmse_v2: float
    max_abs_err_v1: float
    max_abs_err_v2: float
    valve_p2p: Tuple[float, float, float]
    constraint_violation_time: float
    settling_time_v1: float = float('nan')
    settling_time_v2: float = float('nan')

    def to_series(self):

        values = self._asdict()
        p2p = values.pop('valve_p2p')

        for name, value in zip(['air', 'valve1', 'valve2'], p2p):
            values[f'valve_p2p_{name}'] = value

        values['valve_p2p_max'] = max(p2p)

        return pd.Series(values)


def _rmse(err):
    return float(np.sqrt(np.mean(err**2)))


def last_disturbance_onset(profile):
    """Start time of the last segment over which the profile changes."""

    onsets = [t0 for t0, v0, v1 in zip(profile.times, profile.values,
                                       profile.values[1:]) if v1 != v0]

    return onsets[-1] if onsets else profile.times[0]


def settling_time(t, err, onset, band):
    """ Time from onset until |err| stays within band for the rest of the
    run; NaN if it never does.
    """

    after = t >= onset

    if not np.any(after):
        return float('nan')

    t_after = t[after]
    outside = np.abs(err[after]) > band

    if not np.any(outside):
        return 0.0

    last_out = np.nonzero(outside)[0][-1]

    if last_out == len(t_after) - 1:
        return float('nan')

    return float(t_after[last_out + 1] - onset)


def compute_metrics(series, scenario, window=(250.0, 300.0),
                    settle_band=0.5):
    """ Computes the run metrics from a time series.

    Args:
        series: DataFrame with the time-series columns.
        scenario: The scenario that was run; supplies the bounds and the
                  disturbance profile.
        window: Time window of the valve peak-to-peak openings [s].
        settle_band: Error band of the settling times [kPa].

    Returns:
        RunMetrics.
    """

    if len(series) == 0:
        raise DomainError('Cannot compute metrics of an empty series')

    t = series['t'].values
    err1 = (series['p1_true'] - series['p1_set']).values
    err2 = (series['p2_true'] - series['p2_set']).values

    in_window = (t >= window[0]) & (t <= window[1])

    if np.any(in_window):
        windowed = series.loc[in_window, VALVE_COLUMNS]
        p2p = tuple(float(x) for x in windowed.max() - windowed.min())
    else:
        p2p = (float('nan'),) * 3

    dt = float(np.median(np.diff(t))) if len(t) > 1 else scenario.dt

    violated = (np.abs(err1) > scenario.eps1) | (np.abs(err2) > scenario.eps2)

    onset = last_disturbance_onset(scenario.mdot_out)

    return RunMetrics(
        rmse_v1=_rmse(err1), rmse_v2=_rmse(err2),
        max_abs_err_v1=float(np.max(np.abs(err1))),
        max_abs_err_v2=float(np.max(np.abs(err2))),
        valve_p2p=p2p,
        constraint_violation_time=float(np.sum(violated) * dt),
        settling_time_v1=settling_time(t, err1, onset, settle_band),
        settling_time_v2=settling_time(t, err2, onset, settle_band))


def phase_metrics(series, scenario, phases=PHASES):
    """Metrics restricted to each phase, one row per phase."""

    rows = {}

    for name, (start, end) in phases.items():
        t = series['t']
        part = series[(t >= start) & (t < end)]
        if len(part) == 0:
            continue
        rows[name] = compute_metrics(part, scenario,
                                     window=(start, end)).to_series()

    return pd.DataFrame(rows).T


def write_timeseries(series, path):

    try:
        series[TIMESERIES_COLUMNS].to_csv(path, index=False,
                                          float_format=FLOAT_FORMAT)
    except OSError as e:
        raise OSError(f'Could not write time series to {path}: {e}') from e


def read_timeseries(path):

    return pd.read_csv(path, float_precision='round_trip')


def save_run(result, target_dir):
    """ Writes the time series, metrics and metadata of a run.

    Args:
        result: A SimulationResult.
        target_dir: Folder to write to; created if missing.
    """

    os.makedirs(target_dir, exist_ok=True)

    write_timeseries(result.series, join(target_dir, 'timeseries.csv'))

    result.metrics.to_series().to_csv(join(target_dir, 'metrics.csv'),
                                      header=False,
                                      float_format=FLOAT_FORMAT)

    if len(result.phase_metrics) > 0:
        result.phase_metrics.to_csv(join(target_dir, 'phase_metrics.csv'),
                                    float_format=FLOAT_FORMAT)

    with open(join(target_dir, 'metadata.json'), 'w') as f:
        json.dump(result.metadata, f, indent=2, sort_keys=True)


def comparison_table(metrics_by_controller):
    """ Side-by-side metrics, one row per controller.

    Args:
        metrics_by_controller: Dict of controller name to RunMetrics.

    Returns:
        DataFrame with the tracking indices and valve peak-to-peak columns.
    """

    columns = ['rmse_v1', 'rmse_v2', 'max_abs_err_v1', 'max_abs_err_v2',
               'valve_p2p_air', 'valve_p2p_valve1', 'valve_p2p_valve2',
               'valve_p2p_max', 'constraint_violation_time']

    table = pd.DataFrame({name: m.to_series() for name, m in
                          metrics_by_controller.items()}).T

    return table[columns]
