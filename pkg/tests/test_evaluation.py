import numpy as np
import pandas as pd
import pytest

from intake_ctrl.evaluation import (TIMESERIES_COLUMNS, RunMetrics,
                                    comparison_table, compute_metrics,
                                    last_disturbance_onset, phase_metrics,
                                    read_timeseries, settling_time,
                                    write_timeseries)
from intake_ctrl.exceptions import DomainError
from intake_ctrl.scenario import get_preset


def _series(n=30001, dt=0.01):

    t = np.arange(n) * dt
    frame = pd.DataFrame(0.0, index=range(n), columns=TIMESERIES_COLUMNS)
    frame['t'] = t
    frame['p1_set'] = 130.0
    frame['p2_set'] = 65.0
    frame['p1_true'] = 130.0
    frame['p2_true'] = 65.0
    for column, opening in zip(['vp_air_act', 'vp1_act', 'vp2_act'],
                               [0.15, 0.27, 0.27]):
        frame[column] = opening

    return frame


def test_constant_error():

    series = _series()
    series['p1_true'] += 1.0

    m = compute_metrics(series, get_preset('physical'))

    assert np.isclose(m.rmse_v1, 1.0)
    assert np.isclose(m.max_abs_err_v1, 1.0)
    assert m.rmse_v2 == 0.0
    assert m.valve_p2p == (0.0, 0.0, 0.0)
    assert m.constraint_violation_time == 0.0


def test_sine_error():

    series = _series()
    series['p2_true'] += 2.0 * np.sin(2 * np.pi * series['t'] / 10.0)

    m = compute_metrics(series.iloc[:-1], get_preset('physical'))

    assert np.isclose(m.rmse_v2, 2.0 / np.sqrt(2), rtol=1e-6)
    assert np.isclose(m.max_abs_err_v2, 2.0, rtol=1e-6)


def test_valve_peak_to_peak_in_window():

    series = _series()
    late = series['t'] >= 260
    series.loc[late, 'vp1_act'] = 0.3
    series.loc[series['t'] < 100, 'vp2_act'] = 0.9

    m = compute_metrics(series, get_preset('physical'), window=(250, 300))

    assert np.isclose(m.valve_p2p[1], 0.03)
    assert m.valve_p2p[2] == 0.0
    assert m.to_series()['valve_p2p_max'] == m.valve_p2p[1]


def test_violation_time():

    series = _series(n=1000)
    series['p2_true'] += 4.0

    m = compute_metrics(series, get_preset('physical'))

    assert np.isclose(m.constraint_violation_time, 10.0)


def test_empty_series():

    with pytest.raises(DomainError):
        compute_metrics(_series(n=0), get_preset('physical'))


def test_settling_time():

    t = np.arange(0, 10, 0.1)
    err = np.where(t < 4.0, 2.0, 0.1)

    assert np.isclose(settling_time(t, err, 1.0, 0.5), 3.0)
    assert np.isnan(settling_time(t, np.full_like(t, 2.0), 1.0, 0.5))
    assert settling_time(t, np.zeros_like(t), 1.0, 0.5) == 0.0


def test_last_disturbance_onset():

    scenario = get_preset('physical')

    assert last_disturbance_onset(scenario.mdot_out) == 280.0


def test_phase_metrics():

    table = phase_metrics(_series(), get_preset('physical'))

    assert list(table.index) == ['phase1', 'phase2', 'phase3']
    assert np.allclose(table['rmse_v1'], 0.0)


def test_timeseries_csv(tmp_path):

    series = _series(n=3)
    series['p1_meas'] = [130.1234567890123, 129.9, 1 / 3]
    path = tmp_path / 'timeseries.csv'

    write_timeseries(series, path)

    with open(path) as f:
        lines = f.read().splitlines()

    assert len(lines) == 4
    assert lines[0].split(',') == TIMESERIES_COLUMNS

    back = read_timeseries(path)

    assert back['p1_meas'].tolist() == series['p1_meas'].tolist()


def test_comparison_table():

    metrics = RunMetrics(rmse_v1=0.1, rmse_v2=0.2, max_abs_err_v1=0.3,
                         max_abs_err_v2=0.4, valve_p2p=(0.01, 0.02, 0.03),
                         constraint_violation_time=0.0)

    table = comparison_table({'adrc': metrics, 'pid': metrics})

    assert list(table.index) == ['adrc', 'pid']
    assert table.loc['pid', 'valve_p2p_max'] == 0.03
