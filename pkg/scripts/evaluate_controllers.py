import os
import time
from dataclasses import replace
from functools import partial
from os.path import join

import pandas as pd

from intake_ctrl.config import SimConfig, load_config
from intake_ctrl.evaluation import comparison_table, save_run
from intake_ctrl.simulation import run_simulation


def evaluate_controller(cfg, output_dir):

    start_time = time.time()
    result = run_simulation(cfg, progress=True)
    end_time = time.time()
    time_taken = end_time - start_time

    save_run(result, output_dir)

    with open(join(output_dir, 'runtime.txt'), 'w') as f:
        f.write(str(time_taken))

    return result.metrics


def get_adrc(cfg, decouple=True):

    adrc = replace(cfg.adrc, decouple=decouple)

    return replace(cfg, adrc=adrc).with_overrides(controller='adrc')


def get_pid(cfg):

    return cfg.with_overrides(controller='pid')


if __name__ == '__main__':

    output_base_dir = os.environ.get('INTAKE_CTRL_EVAL_PATH', 'experiments')
    config_path = os.environ.get('INTAKE_CTRL_CONFIG')

    base_cfg = SimConfig() if config_path is None else load_config(config_path)

    presets = ['physical', 'physical-steep']

    controllers = {
        'adrc': get_adrc,
        'adrc_no_decoupling': partial(get_adrc, decouple=False),
        'pid': get_pid,
    }

    summaries = []

    for preset in presets:

        metrics = {}

        for name, get_cfg in controllers.items():

            print(f'Evaluating {name} on {preset}')

            cfg = get_cfg(base_cfg.with_overrides(scenario=preset))
            target_dir = join(output_base_dir, preset, name)
            os.makedirs(target_dir, exist_ok=True)

            metrics[name] = evaluate_controller(cfg, target_dir)

        table = comparison_table(metrics)
        table.to_csv(join(output_base_dir, preset, 'comparison.csv'))

        summaries.append(table.assign(scenario=preset))

    pd.concat(summaries).to_csv(join(output_base_dir, 'summary.csv'))
